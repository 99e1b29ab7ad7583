import numpy as np

from farmrl.enums import Padding
from farmrl.nets.init import truncated_normal
from farmrl.nets.layer import Layer
from farmrl.tensor import ShapeError, Tensor
from farmrl.tensor import ops


class Conv(Layer):
    """Convolution with bias."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        name: str,
        stride: int = 1,
    ) -> None:
        super().__init__(name)
        self.stride = stride
        fan_in = in_channels * kernel_size * kernel_size
        self.kernel = self.add_parameter(
            "kernel", truncated_normal(rng, (out_channels, in_channels, kernel_size, kernel_size), fan_in)
        )
        self.bias = self.add_parameter("bias", np.zeros(out_channels))

    def __call__(self, x: Tensor) -> Tensor:
        return ops.conv2d(x, self.kernel, self.bias, stride=self.stride, padding=Padding.SAME)


class ResidualBlock(Layer):
    """relu(x + conv_b(relu(conv_a(x)))), identity skip."""

    def __init__(self, channels: int, kernel_size: int, rng: np.random.Generator, name: str) -> None:
        super().__init__(name)
        self.conv_a = self.add_child(Conv(channels, channels, kernel_size, rng, "conv_a"))
        self.conv_b = self.add_child(Conv(channels, channels, kernel_size, rng, "conv_b"))

    def __call__(self, x: Tensor) -> Tensor:
        return ops.relu(x + self.conv_b(ops.relu(self.conv_a(x))))


class ResNetEncoder(Layer):
    """Stacked stages, each a stride-2 SAME convolution with ReLU followed by residual blocks.

    The output map is cropped to the top-left floor(H/2^S) × floor(W/2^S) positions, S being the number of stages:
    99×99 inputs give 12×12 and 56×56 inputs give 7×7.

    Parameters
    ----------
    in_channels : int
        Image channels.
    channels : tuple[int, ...]
        Output channels of each stage.
    blocks : tuple[int, ...]
        Residual blocks per stage.
    kernel_size : int
        Kernel size of every convolution.
    rng : np.random.Generator
        Source for initial weights.
    """

    def __init__(
        self,
        in_channels: int,
        channels: tuple[int, ...],
        blocks: tuple[int, ...],
        kernel_size: int,
        rng: np.random.Generator,
        name: str = "resnet",
    ) -> None:
        super().__init__(name)
        if len(channels) != len(blocks):
            raise ValueError(f"ResNet channels {channels} and blocks {blocks} must have the same length.")
        self.in_channels = in_channels
        self.out_channels = channels[-1]
        self.stages: list[tuple[Conv, list[ResidualBlock]]] = []
        previous = in_channels
        for s, (c, n_blocks) in enumerate(zip(channels, blocks), start=1):
            conv = self.add_child(Conv(previous, c, kernel_size, rng, f"stage{s}_conv", stride=2))
            residuals = [
                self.add_child(ResidualBlock(c, kernel_size, rng, f"stage{s}_block{b}"))
                for b in range(1, n_blocks + 1)
            ]
            self.stages.append((conv, residuals))
            previous = c

    def output_hw(self, height: int, width: int) -> tuple[int, int]:
        factor = 2 ** len(self.stages)
        return height // factor, width // factor

    def __call__(self, image: Tensor) -> Tensor:
        if image.ndim != 3 or image.shape[0] != self.in_channels:
            raise ShapeError(f"ResNet expects a {self.in_channels}×H×W image, got {image.shape}.")
        out_h, out_w = self.output_hw(image.shape[1], image.shape[2])
        if out_h < 1 or out_w < 1:
            raise ShapeError(f"Image {image.shape} is too small for {len(self.stages)} stride-2 stages.")
        x = image
        for conv, residuals in self.stages:
            x = ops.relu(conv(x))
            for block in residuals:
                x = block(x)
        if x.shape[1] != out_h:
            x = ops.slice_(x, 0, out_h, axis=1)
        if x.shape[2] != out_w:
            x = ops.slice_(x, 0, out_w, axis=2)
        return x
