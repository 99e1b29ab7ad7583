import numpy as np
from pydantic import BaseModel, ConfigDict

from farmrl.enums import Padding
from farmrl.nets.init import truncated_normal
from farmrl.nets.layer import Layer
from farmrl.tensor import ShapeError, Tensor
from farmrl.tensor import ops


class ConvLSTMState(BaseModel):
    """Hidden and cell feature maps, each hidden_channels × h × w."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    hidden: Tensor
    cell: Tensor


class ConvLSTMCell(Layer):
    """Convolutional LSTM: all four gates come from a single SAME convolution over concat(input, hidden) along channels.

    Parameters
    ----------
    in_channels : int
        Channels of the input feature map.
    hidden_channels : int
        Channels of the hidden and cell maps.
    kernel_size : int
        Odd convolution kernel size.
    rng : np.random.Generator
        Source for initial weights.
    """

    def __init__(
        self,
        in_channels: int,
        hidden_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        name: str = "convlstm",
    ) -> None:
        super().__init__(name)
        self.in_channels = in_channels
        self.hidden_channels = hidden_channels
        stacked = in_channels + hidden_channels
        self.kernel = self.add_parameter(
            "kernel",
            truncated_normal(
                rng,
                (4 * hidden_channels, stacked, kernel_size, kernel_size),
                stacked * kernel_size * kernel_size,
            ),
        )
        bias = np.zeros(4 * hidden_channels)
        bias[hidden_channels : 2 * hidden_channels] = 1.0
        self.bias = self.add_parameter("bias", bias)

    def initial_state(self, height: int, width: int) -> ConvLSTMState:
        return ConvLSTMState(
            hidden=Tensor.zeros(self.hidden_channels, height, width),
            cell=Tensor.zeros(self.hidden_channels, height, width),
        )

    def step(self, x: Tensor, state: ConvLSTMState) -> ConvLSTMState:
        if x.ndim != 3 or x.shape[0] != self.in_channels:
            raise ShapeError(
                f"ConvLSTM expects a {self.in_channels}×h×w input, got {x.shape}."
            )
        if state.hidden.shape[1:] != x.shape[1:]:
            raise ShapeError(
                f"ConvLSTM state {state.hidden.shape} does not match input spatial dims {x.shape}."
            )
        c = self.hidden_channels
        gates = ops.conv2d(
            ops.concat([x, state.hidden], axis=0), self.kernel, self.bias, stride=1, padding=Padding.SAME
        )
        i = ops.sigmoid(ops.slice_(gates, 0, c))
        f = ops.sigmoid(ops.slice_(gates, c, 2 * c))
        g = ops.tanh(ops.slice_(gates, 2 * c, 3 * c))
        o = ops.sigmoid(ops.slice_(gates, 3 * c, 4 * c))
        cell = f * state.cell + i * g
        return ConvLSTMState(hidden=o * ops.tanh(cell), cell=cell)
