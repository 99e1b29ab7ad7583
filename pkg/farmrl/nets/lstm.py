import numpy as np
from pydantic import BaseModel, ConfigDict

from farmrl.nets.init import recurrent_orthogonal, truncated_normal
from farmrl.nets.layer import Layer
from farmrl.tensor import ShapeError, Tensor
from farmrl.tensor import ops


class LSTMState(BaseModel):
    """Hidden and cell vectors of an LSTM. Only `hidden` is visible outside the cell."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    hidden: Tensor
    cell: Tensor


class LSTMCell(Layer):
    """Single-step LSTM with gate order (input, forget, candidate, output) packed along the columns of W_ih and W_hh.

    Parameters
    ----------
    input_size : int
        Length of the input vector.
    hidden_size : int
        Length of h and c.
    rng : np.random.Generator
        Source for initial weights.
    name : str
        Path segment, "lstm" by default.
    """

    def __init__(
        self, input_size: int, hidden_size: int, rng: np.random.Generator, name: str = "lstm"
    ) -> None:
        super().__init__(name)
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.W_ih = self.add_parameter(
            "W_ih", truncated_normal(rng, (input_size, 4 * hidden_size), input_size)
        )
        self.W_hh = self.add_parameter("W_hh", recurrent_orthogonal(rng, hidden_size, 4))
        bias = np.zeros(4 * hidden_size)
        bias[hidden_size : 2 * hidden_size] = 1.0
        self.b = self.add_parameter("b", bias)

    def step(self, x: Tensor, state: LSTMState) -> LSTMState:
        if x.shape != (self.input_size,):
            raise ShapeError(f"LSTM {self.name} expects input shape ({self.input_size},), got {x.shape}.")
        d = self.hidden_size
        gates = ops.matmul(x, self.W_ih) + ops.matmul(state.hidden, self.W_hh) + self.b
        i = ops.sigmoid(ops.slice_(gates, 0, d))
        f = ops.sigmoid(ops.slice_(gates, d, 2 * d))
        g = ops.tanh(ops.slice_(gates, 2 * d, 3 * d))
        o = ops.sigmoid(ops.slice_(gates, 3 * d, 4 * d))
        cell = f * state.cell + i * g
        return LSTMState(hidden=o * ops.tanh(cell), cell=cell)
