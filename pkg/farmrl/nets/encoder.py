import numpy as np

from farmrl.nets.conv_lstm import ConvLSTMCell, ConvLSTMState
from farmrl.nets.layer import Layer
from farmrl.nets.resnet import ResNetEncoder
from farmrl.tensor import ShapeError, Tensor
from farmrl.tensor import ops


def image_to_tensor(image: np.ndarray) -> Tensor:
    """Converts an H×W×3 uint8 RGB frame into a 3×H×W tensor scaled to [0, 1]."""
    if image.ndim != 3 or image.shape[2] != 3:
        raise ShapeError(f"Expected an H×W×3 RGB frame, got {image.shape}.")
    return Tensor(np.transpose(image, (2, 0, 1)) / 255.0)


class ObservationEncoder(Layer):
    """ResNet followed by a ConvLSTM. Produces the m×d_z feature matrix Z whose rows are spatial positions, row-major.

    Parameters
    ----------
    channels : tuple[int, ...]
        ResNet stage channels.
    blocks : tuple[int, ...]
        ResNet residual blocks per stage.
    kernel_size : int
        Kernel size of the ResNet and ConvLSTM convolutions.
    feature_dim : int
        ConvLSTM hidden channels, which is d_z.
    rng : np.random.Generator
        Source for initial weights.
    """

    def __init__(
        self,
        channels: tuple[int, ...],
        blocks: tuple[int, ...],
        kernel_size: int,
        feature_dim: int,
        rng: np.random.Generator,
        name: str = "encoder",
    ) -> None:
        super().__init__(name)
        self.feature_dim = feature_dim
        self.resnet = self.add_child(ResNetEncoder(3, channels, blocks, kernel_size, rng))
        self.convlstm = self.add_child(
            ConvLSTMCell(channels[-1], feature_dim, kernel_size, rng)
        )

    def initial_state(self, image_hw: tuple[int, int]) -> ConvLSTMState:
        return self.convlstm.initial_state(*self.resnet.output_hw(*image_hw))

    def num_positions(self, image_hw: tuple[int, int]) -> int:
        out_h, out_w = self.resnet.output_hw(*image_hw)
        return out_h * out_w

    def __call__(self, image: Tensor, state: ConvLSTMState) -> tuple[Tensor, ConvLSTMState]:
        if image.ndim != 3 or image.shape[0] != 3:
            raise ShapeError(f"Observation must have 3 channels (3×H×W), got {image.shape}.")
        features = self.resnet(image)
        next_state = self.convlstm.step(features, state)
        hidden = next_state.hidden
        m = hidden.shape[1] * hidden.shape[2]
        z = ops.transpose(ops.reshape(hidden, (self.feature_dim, m)))
        return z, next_state
