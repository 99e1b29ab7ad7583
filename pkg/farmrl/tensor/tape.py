from __future__ import annotations

import threading
from collections.abc import Callable, Sequence
from typing import TYPE_CHECKING

import numpy as np

from farmrl.tensor.errors import TapeError

if TYPE_CHECKING:
    from farmrl.tensor.tensor import Tensor

BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]

_local = threading.local()


def _stack() -> list[Tape]:
    if not hasattr(_local, "stack"):
        _local.stack = []
    return _local.stack


def active_tape() -> Tape | None:
    """Returns the innermost tape recording on this thread, or None when ops run untracked."""
    stack = _stack()
    return stack[-1] if stack else None


class Node:
    """One executed differentiable op: its output, its inputs and the function mapping the output gradient to input gradients."""

    __slots__ = ("op_name", "output", "inputs", "backward_fn")

    def __init__(
        self,
        op_name: str,
        output: Tensor,
        inputs: Sequence[Tensor],
        backward_fn: BackwardFn,
    ) -> None:
        self.op_name = op_name
        self.output = output
        self.inputs = tuple(inputs)
        self.backward_fn = backward_fn


class Tape:
    """An ordered record of the differentiable ops executed while the tape is active.

    Ops are appended as they run, so every op's inputs precede it on the tape. Tapes are confined to the thread that
    opened them: parallel actors each hold their own (or none at all while acting).

    Example
    -------
    >>> with Tape() as tape:
    ...     loss = ops.sum(ops.matmul(x, w))
    >>> tape.backward(loss)
    """

    def __init__(self) -> None:
        self.nodes: list[Node] = []

    def __enter__(self) -> Tape:
        _stack().append(self)
        return self

    def __exit__(self, *exc: object) -> None:
        stack = _stack()
        if not stack or stack[-1] is not self:
            raise TapeError("Tapes must be closed in the reverse order they were opened.")
        stack.pop()

    def __len__(self) -> int:
        return len(self.nodes)

    def record(
        self,
        op_name: str,
        output: Tensor,
        inputs: Sequence[Tensor],
        backward_fn: BackwardFn,
    ) -> None:
        self.nodes.append(Node(op_name, output, inputs, backward_fn))

    def backward(self, loss: Tensor) -> None:
        """Populates the grad of every requires_grad tensor reachable from the given scalar loss.

        Ops are visited exactly once, in reverse tape order. Gradients of tensors used more than once accumulate
        additively, and leaf gradients add onto whatever the leaf already holds (call zero_grad between updates).

        Parameters
        ----------
        loss : Tensor
            A single-element tensor recorded on this tape.
        """
        if loss.size != 1:
            raise TapeError(f"backward requires a scalar loss, got shape {loss.shape}.")
        if not self.nodes:
            raise TapeError("backward called on an empty tape.")
        if not loss.requires_grad:
            raise TapeError("The loss does not depend on any tensor that requires grad.")

        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        leaves: dict[int, Tensor] = {}
        for node in reversed(self.nodes):
            upstream = grads.pop(id(node.output), None)
            if upstream is None:
                continue
            node.output.grad = upstream
            input_grads = node.backward_fn(upstream)
            for tensor, grad in zip(node.inputs, input_grads):
                if grad is None or not tensor.requires_grad:
                    continue
                key = id(tensor)
                if tensor.is_leaf:
                    leaves[key] = tensor
                if key in grads:
                    grads[key] = grads[key] + grad
                else:
                    grads[key] = grad
        for key, tensor in leaves.items():
            tensor.accumulate_grad(grads[key])


def backward(loss: Tensor) -> None:
    """Runs the reverse pass on the tape that recorded the loss."""
    tape = loss.tape
    if tape is None:
        raise TapeError("The loss was not recorded on any tape. Compute it inside `with Tape():`.")
    tape.backward(loss)
