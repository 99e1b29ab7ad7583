import numpy as np

from farmrl.nets.init import truncated_normal
from farmrl.nets.layer import Layer
from farmrl.tensor import ShapeError, Tensor
from farmrl.tensor import ops


class MLPHead(Layer):
    """One ReLU hidden layer followed by a linear output layer.

    Parameters
    ----------
    in_size : int
        Input length.
    hidden_size : int
        Hidden units (200 in every preset).
    out_size : int
        Output length.
    rng : np.random.Generator
        Source for initial weights.
    name : str
        Path segment, eg: "policy_head".
    zero_init_output : bool
        Start the output layer at zero, which makes initial policy logits uniform.
    """

    def __init__(
        self,
        in_size: int,
        hidden_size: int,
        out_size: int,
        rng: np.random.Generator,
        name: str,
        zero_init_output: bool = False,
    ) -> None:
        super().__init__(name)
        self.in_size = in_size
        self.W1 = self.add_parameter("W1", truncated_normal(rng, (in_size, hidden_size), in_size))
        self.b1 = self.add_parameter("b1", np.zeros(hidden_size))
        output = (
            np.zeros((hidden_size, out_size))
            if zero_init_output
            else truncated_normal(rng, (hidden_size, out_size), hidden_size)
        )
        self.W2 = self.add_parameter("W2", output)
        self.b2 = self.add_parameter("b2", np.zeros(out_size))

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape != (self.in_size,):
            raise ShapeError(f"{self.name} expects input shape ({self.in_size},), got {x.shape}.")
        hidden = ops.relu(ops.matmul(x, self.W1) + self.b1)
        return ops.matmul(hidden, self.W2) + self.b2
