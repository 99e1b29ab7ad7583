from collections.abc import Iterator, Mapping
from typing import TypeVar

import numpy as np

from farmrl.tensor import CheckpointMismatchError, Tensor

L = TypeVar("L", bound="Layer")


class Layer:
    """A named group of trainable tensors and child layers.

    Parameter paths are built from layer names joined by "/", so a parameter "W_ih" of the "lstm" child of "module3"
    under the "farm" root is addressed as "farm/module3/lstm/W_ih". These paths are the checkpoint keys.

    Parameters
    ----------
    name : str
        The path segment of this layer.
    """

    def __init__(self, name: str) -> None:
        self.name = name
        self._parameters: dict[str, Tensor] = {}
        self._children: dict[str, Layer] = {}

    def add_parameter(self, name: str, values: np.ndarray) -> Tensor:
        if name in self._parameters or name in self._children:
            raise ValueError(f"Layer {self.name} already has a member named {name}.")
        tensor = Tensor(values, requires_grad=True, name=name)
        self._parameters[name] = tensor
        return tensor

    def add_child(self, child: L) -> L:
        if child.name in self._parameters or child.name in self._children:
            raise ValueError(f"Layer {self.name} already has a member named {child.name}.")
        self._children[child.name] = child
        return child

    @property
    def children(self) -> list["Layer"]:
        return list(self._children.values())

    def named_parameters(self, prefix: str | None = None) -> Iterator[tuple[str, Tensor]]:
        """Yields (path, tensor) pairs: own parameters first in creation order, then each child's, depth first."""
        path = self.name if prefix is None else f"{prefix}/{self.name}"
        for name, tensor in self._parameters.items():
            yield f"{path}/{name}", tensor
        for child in self._children.values():
            yield from child.named_parameters(path)

    def parameters(self) -> list[Tensor]:
        return [tensor for _, tensor in self.named_parameters()]

    def parameter_dict(self) -> dict[str, Tensor]:
        return dict(self.named_parameters())

    def qualify_names(self) -> None:
        """Renames every parameter tensor to its full path, so reports and error messages can name it."""
        for path, tensor in self.named_parameters():
            tensor.name = path

    def num_parameters(self) -> int:
        return sum(tensor.size for tensor in self.parameters())

    def zero_grad(self) -> None:
        for tensor in self.parameters():
            tensor.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {path: tensor.numpy() for path, tensor in self.named_parameters()}

    def load_parameters(self, values: Mapping[str, np.ndarray]) -> None:
        """Replaces every parameter with the entry stored under its path.

        Raises
        ------
        CheckpointMismatchError
            If any path is missing, unexpected, or has a different shape. Nothing is assigned in that case.
        """
        own = self.parameter_dict()
        diffs: list[str] = []
        for path, tensor in own.items():
            if path not in values:
                diffs.append(f"{path}: missing from checkpoint, model {tensor.shape}")
            elif tuple(values[path].shape) != tensor.shape:
                diffs.append(f"{path}: checkpoint {tuple(values[path].shape)} != model {tensor.shape}")
        for path in values:
            if path not in own:
                diffs.append(f"{path}: not a model parameter, checkpoint {tuple(values[path].shape)}")
        if diffs:
            raise CheckpointMismatchError(diffs)
        for path, tensor in own.items():
            tensor.assign(values[path])

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(name='{self.name}', parameters={self.num_parameters()})"
