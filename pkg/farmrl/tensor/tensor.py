from __future__ import annotations

from typing import TYPE_CHECKING, Any

import numpy as np

from farmrl.tensor.errors import NonFiniteError, ShapeError, TapeError
from farmrl.tensor.precision import get_default_dtype
from farmrl.tensor.tape import active_tape

if TYPE_CHECKING:
    from farmrl.tensor.tape import Tape


def check_finite(values: np.ndarray, op_name: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"{op_name} produced non-finite values.")


class Tensor:
    """A dense, row-major n-dimensional array that can take part in reverse-mode differentiation.

    The data buffer is read-only once created. Leaf tensors that require grad (parameters) carry a same-shaped grad
    buffer from creation; intermediate tensors receive theirs during backward.

    Parameters
    ----------
    data : Any
        Anything numpy can turn into an array. It is copied and cast to the current default dtype.
    requires_grad : bool
        Whether gradients should flow into this tensor.
    name : str | None
        Optional label, used in error messages and gradient-check reports.
    """

    __slots__ = ("_data", "requires_grad", "grad", "is_leaf", "name", "tape")

    def __init__(
        self,
        data: Any,
        requires_grad: bool = False,
        name: str | None = None,
        dtype: type[np.floating] | None = None,
    ) -> None:
        array = np.array(data, dtype=dtype or get_default_dtype())
        check_finite(array, name or "Tensor")
        array.flags.writeable = False
        self._data = array
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = np.zeros_like(array) if requires_grad else None
        self.is_leaf = True
        self.name = name
        self.tape: Tape | None = None

    @classmethod
    def from_op(cls, data: np.ndarray, op_name: str) -> Tensor:
        """Wraps an op result without copying it."""
        check_finite(data, op_name)
        tensor = cls.__new__(cls)
        data.flags.writeable = False
        tensor._data = data
        tensor.requires_grad = False
        tensor.grad = None
        tensor.is_leaf = True
        tensor.name = None
        tensor.tape = None
        return tensor

    @classmethod
    def zeros(cls, *shape: int) -> Tensor:
        return cls(np.zeros(shape))

    @classmethod
    def ones(cls, *shape: int) -> Tensor:
        return cls(np.ones(shape))

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def shape(self) -> tuple[int, ...]:
        return self._data.shape

    @property
    def ndim(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return int(self._data.size)

    @property
    def dtype(self) -> np.dtype:
        return self._data.dtype

    def numpy(self) -> np.ndarray:
        return self._data.copy()

    def item(self) -> float:
        if self.size != 1:
            raise ShapeError(f"item() requires a single-element tensor, got shape {self.shape}.")
        return float(self._data.reshape(-1)[0])

    def assign(self, values: np.ndarray) -> None:
        """Replaces the data buffer. Only allowed while no tape is recording, i.e. between learner updates."""
        if active_tape() is not None:
            raise TapeError(
                f"Cannot assign to tensor {self.name or ''} while a tape is recording."
            )
        values = np.array(values, dtype=self._data.dtype)
        if values.shape != self.shape:
            raise ShapeError(f"Cannot assign shape {values.shape} to tensor of shape {self.shape}.")
        check_finite(values, f"assign({self.name})")
        values.flags.writeable = False
        self._data = values

    def accumulate_grad(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(grad, dtype=self._data.dtype)
        else:
            self.grad = self.grad + grad

    def zero_grad(self) -> None:
        if self.requires_grad:
            self.grad = np.zeros_like(self._data)

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    def __len__(self) -> int:
        return self.shape[0]

    # The operators below delegate to farmrl.tensor.ops, which imports this module.
    def __add__(self, other: Tensor | float) -> Tensor:
        from farmrl.tensor import ops

        return ops.add(self, other)

    def __radd__(self, other: float) -> Tensor:
        from farmrl.tensor import ops

        return ops.add(other, self)

    def __sub__(self, other: Tensor | float) -> Tensor:
        from farmrl.tensor import ops

        return ops.sub(self, other)

    def __rsub__(self, other: float) -> Tensor:
        from farmrl.tensor import ops

        return ops.sub(other, self)

    def __mul__(self, other: Tensor | float) -> Tensor:
        from farmrl.tensor import ops

        return ops.mul(self, other)

    def __rmul__(self, other: float) -> Tensor:
        from farmrl.tensor import ops

        return ops.mul(other, self)

    def __neg__(self) -> Tensor:
        from farmrl.tensor import ops

        return ops.neg(self)

    def __matmul__(self, other: Tensor) -> Tensor:
        from farmrl.tensor import ops

        return ops.matmul(self, other)
