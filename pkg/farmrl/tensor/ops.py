"""Differentiable tensor operations.

Every op computes its result with numpy, wraps it in a Tensor and, when a tape is recording and any input requires
grad, records a backward function that maps the output gradient to one gradient per input.

Broadcasting is deliberately narrow: operands of elementwise ops must have equal shapes, or one of them must be a
scalar, or one must be a row vector ([d] or [1×d]) applied over every row of an [m×d] matrix.
"""

from collections.abc import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from farmrl.enums import Padding
from farmrl.tensor.errors import BroadcastError, ShapeError
from farmrl.tensor.tape import BackwardFn, active_tape
from farmrl.tensor.tensor import Tensor

_SAME = "same"
_SCALAR = "scalar"
_ROW = "row"


def _result(
    op_name: str, data: np.ndarray, inputs: Sequence[Tensor], backward_fn: BackwardFn
) -> Tensor:
    out = Tensor.from_op(np.asarray(data), op_name)
    tape = active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out.is_leaf = False
        out.tape = tape
        tape.record(op_name, out, inputs, backward_fn)
    return out


def as_tensor(value: Tensor | float | np.ndarray) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _is_scalar(shape: tuple[int, ...]) -> bool:
    return shape == () or shape == (1,)


def _broadcast_rule(
    op_name: str, a_shape: tuple[int, ...], b_shape: tuple[int, ...]
) -> tuple[str, str]:
    if a_shape == b_shape:
        return _SAME, _SAME
    if _is_scalar(b_shape):
        return _SAME, _SCALAR
    if _is_scalar(a_shape):
        return _SCALAR, _SAME
    if len(a_shape) == 2 and b_shape in ((1, a_shape[1]), (a_shape[1],)):
        return _SAME, _ROW
    if len(b_shape) == 2 and a_shape in ((1, b_shape[1]), (b_shape[1],)):
        return _ROW, _SAME
    raise BroadcastError(
        f"{op_name}: cannot broadcast shapes {a_shape} and {b_shape}. Only scalar and row-over-rows broadcasting is supported."
    )


def _unbroadcast(grad: np.ndarray, rule: str, shape: tuple[int, ...]) -> np.ndarray:
    if rule == _SAME:
        return grad
    if rule == _SCALAR:
        return np.full(shape, grad.sum(), dtype=grad.dtype)
    return grad.sum(axis=0).reshape(shape)


def add(a: Tensor | float, b: Tensor | float) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    rule_a, rule_b = _broadcast_rule("add", a.shape, b.shape)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g, rule_a, a.shape), _unbroadcast(g, rule_b, b.shape)

    return _result("add", a.data + b.data, (a, b), backward)


def sub(a: Tensor | float, b: Tensor | float) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    rule_a, rule_b = _broadcast_rule("sub", a.shape, b.shape)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g, rule_a, a.shape), _unbroadcast(-g, rule_b, b.shape)

    return _result("sub", a.data - b.data, (a, b), backward)


def mul(a: Tensor | float, b: Tensor | float) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    rule_a, rule_b = _broadcast_rule("mul", a.shape, b.shape)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return (
            _unbroadcast(g * b.data, rule_a, a.shape),
            _unbroadcast(g * a.data, rule_b, b.shape),
        )

    return _result("mul", a.data * b.data, (a, b), backward)


def neg(x: Tensor) -> Tensor:
    return _result("neg", -x.data, (x,), lambda g: (-g,))


def _stable_sigmoid(values: np.ndarray) -> np.ndarray:
    out = np.empty_like(values)
    positive = values >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-values[positive]))
    exp_neg = np.exp(values[~positive])
    out[~positive] = exp_neg / (1.0 + exp_neg)
    return out


def sigmoid(x: Tensor) -> Tensor:
    y = _stable_sigmoid(x.data)
    return _result("sigmoid", y, (x,), lambda g: (g * y * (1.0 - y),))


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    return _result("tanh", y, (x,), lambda g: (g * (1.0 - y * y),))


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return _result("relu", np.where(mask, x.data, 0.0).astype(x.dtype), (x,), lambda g: (g * mask,))


def exp(x: Tensor) -> Tensor:
    y = np.exp(x.data)
    return _result("exp", y, (x,), lambda g: (g * y,))


def log(x: Tensor) -> Tensor:
    return _result("log", np.log(x.data), (x,), lambda g: (g / x.data,))


def square(x: Tensor) -> Tensor:
    return _result("square", x.data * x.data, (x,), lambda g: (2.0 * g * x.data,))


def elementwise(op: str, *args: Tensor | float) -> Tensor:
    """Dispatches one of the named pointwise ops: add, mul, sigmoid, tanh, relu."""
    binary = {"add": add, "mul": mul, "sub": sub}
    unary = {"sigmoid": sigmoid, "tanh": tanh, "relu": relu, "exp": exp, "log": log}
    if op in binary:
        if len(args) != 2:
            raise ValueError(f"elementwise {op} takes 2 arguments, got {len(args)}.")
        return binary[op](args[0], args[1])
    if op in unary:
        if len(args) != 1:
            raise ValueError(f"elementwise {op} takes 1 argument, got {len(args)}.")
        return unary[op](as_tensor(args[0]))
    raise ValueError(f"Unknown elementwise op '{op}'.")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product. 1-D operands act as a row vector on the left and a column vector on the right."""
    if a.ndim not in (1, 2) or b.ndim not in (1, 2):
        raise ShapeError(f"matmul supports 1-D and 2-D operands, got shapes {a.shape} and {b.shape}.")
    inner_b = b.shape[0]
    if a.shape[-1] != inner_b:
        raise ShapeError(
            f"matmul: inner dimensions differ for shapes {a.shape} and {b.shape}."
        )
    a_data, b_data = a.data, b.data

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if a.ndim == 2 and b.ndim == 2:
            return g @ b_data.T, a_data.T @ g
        if a.ndim == 1 and b.ndim == 2:
            return b_data @ g, np.outer(a_data, g)
        if a.ndim == 2 and b.ndim == 1:
            return np.outer(g, b_data), a_data.T @ g
        return g * b_data, g * a_data

    return _result("matmul", np.asarray(a_data @ b_data), (a, b), backward)


def _same_padding(size: int, kernel: int, stride: int) -> tuple[int, int, int]:
    out = -(-size // stride)
    total = max((out - 1) * stride + kernel - size, 0)
    return out, total // 2, total - total // 2


def conv2d(
    x: Tensor,
    kernel: Tensor,
    bias: Tensor | None = None,
    stride: int = 1,
    padding: Padding = Padding.SAME,
) -> Tensor:
    """2-D cross-correlation of a [C_in×H×W] input with a [C_out×C_in×K×K] kernel.

    SAME padding zero-pads so the output is ceil(H/stride)×ceil(W/stride), splitting odd padding with the extra row and
    column at the bottom/right. VALID padding does not pad.
    """
    if x.ndim != 3 or kernel.ndim != 4:
        raise ShapeError(
            f"conv2d expects a C×H×W input and a C_out×C_in×K×K kernel, got {x.shape} and {kernel.shape}."
        )
    c_in, height, width = x.shape
    c_out, k_in, k_h, k_w = kernel.shape
    if k_in != c_in:
        raise ShapeError(
            f"conv2d: input {x.shape} has {c_in} channels but kernel {kernel.shape} expects {k_in}."
        )
    if k_h != k_w:
        raise ShapeError(f"conv2d expects square kernels, got {kernel.shape}.")
    if stride < 1:
        raise ValueError(f"conv2d stride must be >= 1, got {stride}.")
    if bias is not None and bias.shape != (c_out,):
        raise ShapeError(f"conv2d bias shape {bias.shape} does not match {c_out} output channels.")
    if padding == Padding.SAME:
        if k_h % 2 == 0:
            raise ShapeError(f"SAME padding requires an odd kernel size, got {k_h}.")
        out_h, top, bottom = _same_padding(height, k_h, stride)
        out_w, left, right = _same_padding(width, k_w, stride)
    else:
        if height < k_h or width < k_w:
            raise ShapeError(f"VALID conv2d kernel {kernel.shape} is larger than input {x.shape}.")
        out_h, out_w = (height - k_h) // stride + 1, (width - k_w) // stride + 1
        top = bottom = left = right = 0

    padded = np.pad(x.data, ((0, 0), (top, bottom), (left, right)))
    windows = sliding_window_view(padded, (k_h, k_w), axis=(1, 2))[
        :, ::stride, ::stride
    ][:, :out_h, :out_w]
    out = np.tensordot(windows, kernel.data, axes=([0, 3, 4], [1, 2, 3])).transpose(2, 0, 1)
    if bias is not None:
        out = out + bias.data[:, None, None]
    kernel_data = kernel.data

    def backward(g: np.ndarray) -> tuple[np.ndarray, ...]:
        grad_kernel = np.tensordot(g, windows, axes=([1, 2], [1, 2]))
        grad_padded = np.zeros_like(padded)
        row_end = stride * (out_h - 1) + 1
        col_end = stride * (out_w - 1) + 1
        for i in range(k_h):
            for j in range(k_w):
                grad_padded[:, i : i + row_end : stride, j : j + col_end : stride] += np.tensordot(
                    kernel_data[:, :, i, j], g, axes=([0], [0])
                )
        grad_x = grad_padded[:, top : top + height, left : left + width]
        if bias is None:
            return grad_x, grad_kernel
        return grad_x, grad_kernel, g.sum(axis=(1, 2))

    inputs = (x, kernel) if bias is None else (x, kernel, bias)
    return _result("conv2d", np.ascontiguousarray(out), inputs, backward)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    if x.ndim == 0 or x.shape[axis] < 1:
        raise ShapeError(f"softmax needs at least one entry along axis {axis}, got shape {x.shape}.")
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return _result("softmax", y, (x,), backward)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    if x.ndim == 0 or x.shape[axis] < 1:
        raise ShapeError(f"log_softmax needs at least one entry along axis {axis}, got shape {x.shape}.")
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    y = shifted - log_norm
    probs = np.exp(y)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g - probs * g.sum(axis=axis, keepdims=True),)

    return _result("log_softmax", y, (x,), backward)


def sum(x: Tensor, axis: int | None = None) -> Tensor:  # noqa: A001
    data = np.asarray(x.data.sum(axis=axis))

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        expanded = g if axis is None else np.expand_dims(g, axis)
        return (np.broadcast_to(expanded, x.shape),)

    return _result("sum", data, (x,), backward)


def mean(x: Tensor, axis: int | None = None) -> Tensor:
    count = x.size if axis is None else x.shape[axis]
    return mul(sum(x, axis), 1.0 / count)


def _check_axis(op_name: str, axis: int, ndim: int) -> int:
    if not -ndim <= axis < ndim:
        raise ShapeError(f"{op_name}: axis {axis} out of range for a {ndim}-D tensor.")
    return axis % ndim


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ShapeError("concat needs at least one tensor.")
    ndim = tensors[0].ndim
    axis = _check_axis("concat", axis, ndim)
    for t in tensors[1:]:
        if t.ndim != ndim or any(
            t.shape[d] != tensors[0].shape[d] for d in range(ndim) if d != axis
        ):
            raise ShapeError(
                f"concat: shapes {tensors[0].shape} and {t.shape} disagree off axis {axis}."
            )
    boundaries = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g: np.ndarray) -> list[np.ndarray]:
        return np.split(g, boundaries, axis=axis)

    return _result(
        "concat", np.concatenate([t.data for t in tensors], axis=axis), tensors, backward
    )


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        data = x.data.reshape(tuple(shape))
    except ValueError as e:
        raise ShapeError(f"Cannot reshape {x.shape} into {tuple(shape)}.") from e
    return _result("reshape", data.copy(), (x,), lambda g: (g.reshape(x.shape),))


def flatten(x: Tensor) -> Tensor:
    """Row-major flatten: for an m×d matrix the row index varies slowest."""
    return reshape(x, (-1,))


def transpose(x: Tensor, axes: Sequence[int] | None = None) -> Tensor:
    perm = tuple(axes) if axes is not None else tuple(reversed(range(x.ndim)))
    inverse = tuple(np.argsort(perm))
    return _result(
        "transpose",
        np.ascontiguousarray(x.data.transpose(perm)),
        (x,),
        lambda g: (g.transpose(inverse),),
    )


def slice_(x: Tensor, start: int, stop: int, axis: int = 0) -> Tensor:
    """Takes x[start:stop] along the given axis."""
    axis = _check_axis("slice", axis, x.ndim)
    if not 0 <= start <= stop <= x.shape[axis]:
        raise ShapeError(f"slice [{start}:{stop}] out of range for axis {axis} of shape {x.shape}.")
    index = tuple(slice(start, stop) if d == axis else slice(None) for d in range(x.ndim))

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        grad = np.zeros(x.shape, dtype=g.dtype)
        grad[index] = g
        return (grad,)

    return _result("slice", x.data[index].copy(), (x,), backward)


def gather_rows(table: Tensor, ids: Sequence[int]) -> Tensor:
    """Embedding lookup: returns the rows of a [V×d] table selected by ids, as a [len(ids)×d] matrix."""
    ids_array = np.asarray(ids, dtype=np.int64)
    if table.ndim != 2:
        raise ShapeError(f"gather_rows expects a 2-D table, got {table.shape}.")
    if ids_array.size and (ids_array.min() < 0 or ids_array.max() >= table.shape[0]):
        raise ValueError(f"gather_rows: ids {ids_array.tolist()} out of range for {table.shape[0]} rows.")

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        grad = np.zeros(table.shape, dtype=g.dtype)
        np.add.at(grad, ids_array, g)
        return (grad,)

    return _result("gather_rows", table.data[ids_array], (table,), backward)


def one_hot(index: int | None, size: int) -> Tensor:
    """Identity encoding of a discrete index; None encodes as the zero vector."""
    values = np.zeros(size)
    if index is not None:
        values[index] = 1.0
    return Tensor(values)
