import threading
from collections.abc import Callable

import numpy as np
import pytest

from farmrl.enums import Padding, Precision
from farmrl.tensor import (
    BroadcastError,
    NonFiniteError,
    ShapeError,
    Tape,
    TapeError,
    Tensor,
    active_tape,
    backward,
    default_dtype,
    get_default_dtype,
    gradcheck,
)
from farmrl.tensor import ops


def leaf(rng: np.random.Generator, *shape: int, name: str = "x", positive: bool = False) -> Tensor:
    values = rng.normal(size=shape)
    if positive:
        values = np.exp(values)
    return Tensor(values, requires_grad=True, name=name)


def weighted_sum(out: Tensor, rng: np.random.Generator) -> Tensor:
    """A scalar loss with a random fixed weight per output entry, so every output gradient differs."""
    weights = Tensor(rng.normal(size=out.shape))
    return ops.sum(ops.reshape(ops.mul(out, weights), (out.size,)))


class TestTensor:
    def test_data_is_read_only(self) -> None:
        x = Tensor([1.0, 2.0])
        with pytest.raises(ValueError):
            x.data[0] = 5.0

    def test_default_dtype(self) -> None:
        assert Tensor([1.0]).dtype == np.float32
        with default_dtype(Precision.FLOAT64):
            assert get_default_dtype() is np.float64
            assert Tensor([1.0]).dtype == np.float64
        assert get_default_dtype() is np.float32

    def test_non_finite_rejected(self) -> None:
        with pytest.raises(NonFiniteError):
            Tensor([1.0, np.inf])
        with pytest.raises(NonFiniteError):
            ops.log(Tensor([0.0]))

    def test_item_requires_single_element(self) -> None:
        assert Tensor([3.0]).item() == 3.0
        with pytest.raises(ShapeError):
            Tensor([1.0, 2.0]).item()

    def test_assign_checks_shape(self) -> None:
        x = Tensor(np.zeros((2, 2)), requires_grad=True)
        x.assign(np.ones((2, 2)))
        np.testing.assert_array_equal(x.data, np.ones((2, 2)))
        with pytest.raises(ShapeError):
            x.assign(np.ones(3))


class TestOps:
    def test_elementwise_values(self) -> None:
        a = Tensor([1.0, -2.0, 3.0])
        b = Tensor([2.0, 2.0, 2.0])
        np.testing.assert_allclose((a + b).data, [3.0, 0.0, 5.0])
        np.testing.assert_allclose((a - b).data, [-1.0, -4.0, 1.0])
        np.testing.assert_allclose((a * b).data, [2.0, -4.0, 6.0])
        np.testing.assert_allclose(ops.relu(a).data, [1.0, 0.0, 3.0])
        np.testing.assert_allclose(ops.elementwise("sigmoid", Tensor([0.0])).data, [0.5])

    def test_row_broadcast(self) -> None:
        m = Tensor(np.arange(6.0).reshape(2, 3))
        row = Tensor([10.0, 20.0, 30.0])
        np.testing.assert_allclose((m + row).data, [[10.0, 21.0, 32.0], [13.0, 24.0, 35.0]])
        np.testing.assert_allclose((m * 2.0).data, np.arange(6.0).reshape(2, 3) * 2)

    def test_broadcast_error_names_shapes(self) -> None:
        with pytest.raises(BroadcastError, match=r"\(2, 3\) and \(2,\)"):
            ops.add(Tensor.zeros(2, 3), Tensor.zeros(2))

    def test_matmul_shape_error(self) -> None:
        with pytest.raises(ShapeError, match=r"\(2, 3\) and \(4, 2\)"):
            ops.matmul(Tensor.zeros(2, 3), Tensor.zeros(4, 2))

    def test_conv2d_same_output_size(self) -> None:
        x = Tensor(np.ones((2, 99, 99)))
        kernel = Tensor(np.ones((3, 2, 3, 3)))
        assert ops.conv2d(x, kernel, stride=2).shape == (3, 50, 50)
        assert ops.conv2d(x, kernel, stride=1).shape == (3, 99, 99)
        assert ops.conv2d(x, kernel, padding=Padding.VALID).shape == (3, 97, 97)

    def test_conv2d_matches_direct_sum(self) -> None:
        rng = np.random.default_rng(3)
        x = rng.normal(size=(2, 4, 4))
        kernel = rng.normal(size=(1, 2, 3, 3))
        out = ops.conv2d(Tensor(x, dtype=np.float64), Tensor(kernel, dtype=np.float64)).data
        padded = np.pad(x, ((0, 0), (1, 1), (1, 1)))
        expected = np.array(
            [[np.sum(padded[:, i : i + 3, j : j + 3] * kernel[0]) for j in range(4)] for i in range(4)]
        )
        np.testing.assert_allclose(out[0], expected, atol=1e-10)

    def test_conv2d_rejects_even_kernel(self) -> None:
        with pytest.raises(ShapeError):
            ops.conv2d(Tensor.zeros(1, 4, 4), Tensor.zeros(1, 1, 2, 2))

    def test_softmax_rows_sum_to_one(self) -> None:
        logits = Tensor(np.random.default_rng(0).normal(size=(4, 5)) * 30)
        np.testing.assert_allclose(ops.softmax(logits, axis=1).data.sum(axis=1), np.ones(4), atol=1e-6)
        np.testing.assert_allclose(
            np.exp(ops.log_softmax(logits, axis=1).data).sum(axis=1), np.ones(4), atol=1e-5
        )

    def test_gather_rows(self) -> None:
        table = Tensor(np.arange(6.0).reshape(3, 2))
        np.testing.assert_array_equal(ops.gather_rows(table, [2, 0, 2]).data, [[4, 5], [0, 1], [4, 5]])

    def test_one_hot(self) -> None:
        np.testing.assert_array_equal(ops.one_hot(2, 4).data, [0, 0, 1, 0])
        np.testing.assert_array_equal(ops.one_hot(None, 3).data, [0, 0, 0])


class TestTape:
    def test_no_recording_without_tape(self) -> None:
        x = Tensor([1.0], requires_grad=True)
        y = x * 2.0
        assert not y.requires_grad
        assert y.tape is None

    def test_reused_tensor_accumulates(self) -> None:
        with default_dtype(Precision.FLOAT64):
            x = Tensor([1.5, -2.0], requires_grad=True)
            with Tape():
                loss = ops.sum(x * x + x)
            backward(loss)
        assert x.grad is not None
        np.testing.assert_allclose(x.grad, 2 * np.array([1.5, -2.0]) + 1)

    def test_non_scalar_loss_raises(self) -> None:
        x = Tensor([1.0, 2.0], requires_grad=True)
        with Tape() as tape:
            y = x * 3.0
        with pytest.raises(TapeError, match="scalar"):
            tape.backward(y)

    def test_assign_while_recording_raises(self) -> None:
        x = Tensor([1.0], requires_grad=True, name="w")
        with Tape():
            with pytest.raises(TapeError):
                x.assign(np.array([2.0]))

    def test_backward_without_tape_raises(self) -> None:
        with pytest.raises(TapeError):
            backward(Tensor([1.0], requires_grad=True))

    def test_tapes_are_thread_confined(self) -> None:
        seen: list[object] = []
        with Tape():
            thread = threading.Thread(target=lambda: seen.append(active_tape()))
            thread.start()
            thread.join()
            assert active_tape() is not None
        assert seen == [None]

    def test_leaf_gradients_add_across_backward_calls(self) -> None:
        with default_dtype(Precision.FLOAT64):
            x = Tensor([2.0], requires_grad=True)
            for _ in range(2):
                with Tape() as tape:
                    loss = ops.sum(x * 3.0)
                tape.backward(loss)
        assert x.grad is not None
        np.testing.assert_allclose(x.grad, [6.0])


def _cases() -> dict[str, Callable[[np.random.Generator], tuple[Callable[[], Tensor], list[Tensor]]]]:
    def binary(op: Callable[[Tensor, Tensor], Tensor], b_shape: tuple[int, ...]) -> Callable:
        def build(rng: np.random.Generator) -> tuple[Callable[[], Tensor], list[Tensor]]:
            a, b = leaf(rng, 3, 4, name="a"), leaf(rng, *b_shape, name="b")
            loss_rng = np.random.default_rng(1)
            weights = Tensor(loss_rng.normal(size=(3, 4)))
            return lambda: ops.sum(ops.reshape(ops.mul(op(a, b), weights), (12,))), [a, b]

        return build

    def unary(op: Callable[[Tensor], Tensor], positive: bool = False) -> Callable:
        def build(rng: np.random.Generator) -> tuple[Callable[[], Tensor], list[Tensor]]:
            x = leaf(rng, 2, 5, positive=positive)
            weights = Tensor(np.random.default_rng(1).normal(size=(2, 5)))
            return lambda: ops.sum(ops.reshape(ops.mul(op(x), weights), (10,))), [x]

        return build

    def matmul(a_shape: tuple[int, ...], b_shape: tuple[int, ...]) -> Callable:
        def build(rng: np.random.Generator) -> tuple[Callable[[], Tensor], list[Tensor]]:
            a, b = leaf(rng, *a_shape, name="a"), leaf(rng, *b_shape, name="b")
            return lambda: weighted_sum(ops.matmul(a, b), np.random.default_rng(1)), [a, b]

        return build

    def conv(stride: int, padding: Padding) -> Callable:
        def build(rng: np.random.Generator) -> tuple[Callable[[], Tensor], list[Tensor]]:
            x, kernel, bias = leaf(rng, 2, 5, 5, name="x"), leaf(rng, 3, 2, 3, 3, name="k"), leaf(rng, 3, name="b")
            return (
                lambda: weighted_sum(ops.conv2d(x, kernel, bias, stride=stride, padding=padding), np.random.default_rng(1)),
                [x, kernel, bias],
            )

        return build

    def structural(build_out: Callable[[Tensor], Tensor], shape: tuple[int, ...]) -> Callable:
        def build(rng: np.random.Generator) -> tuple[Callable[[], Tensor], list[Tensor]]:
            x = leaf(rng, *shape)
            return lambda: weighted_sum(build_out(x), np.random.default_rng(1)), [x]

        return build

    return {
        "add": binary(ops.add, (3, 4)),
        "add_row": binary(ops.add, (4,)),
        "sub_scalar": binary(ops.sub, (1,)),
        "mul": binary(ops.mul, (3, 4)),
        "mul_row": binary(ops.mul, (1, 4)),
        "sigmoid": unary(ops.sigmoid),
        "tanh": unary(ops.tanh),
        "relu": unary(ops.relu),
        "exp": unary(ops.exp),
        "log": unary(ops.log, positive=True),
        "square": unary(ops.square),
        "neg": unary(ops.neg),
        "softmax": unary(lambda x: ops.softmax(x, axis=1)),
        "log_softmax": unary(lambda x: ops.log_softmax(x, axis=1)),
        "matmul_2d": matmul((3, 4), (4, 2)),
        "matmul_vec_mat": matmul((4,), (4, 3)),
        "matmul_mat_vec": matmul((3, 4), (4,)),
        "conv_same_stride1": conv(1, Padding.SAME),
        "conv_same_stride2": conv(2, Padding.SAME),
        "conv_valid": conv(1, Padding.VALID),
        "sum_axis": structural(lambda x: ops.sum(x, axis=1), (3, 4)),
        "mean": structural(lambda x: ops.reshape(ops.mean(x), (1,)), (3, 4)),
        "concat": structural(lambda x: ops.concat([x, ops.tanh(x)], axis=0), (2, 3)),
        "reshape": structural(lambda x: ops.reshape(x, (6, 2)), (3, 4)),
        "transpose": structural(ops.transpose, (3, 4)),
        "slice": structural(lambda x: ops.slice_(x, 1, 3, axis=1), (3, 4)),
        "flatten": structural(ops.flatten, (2, 2, 3)),
        "gather_rows": structural(lambda x: ops.gather_rows(x, [2, 0, 2]), (3, 4)),
    }


CASES = _cases()


class TestGradcheck:
    @pytest.mark.parametrize("case", sorted(CASES))
    def test_op_gradients(self, case: str) -> None:
        with default_dtype(Precision.FLOAT64):
            loss_fn, params = CASES[case](np.random.default_rng(0))
            report = gradcheck(loss_fn, params, step=1e-5, tolerance=1e-4)
        assert report.passed, report.worst

    def test_report_flags_wrong_gradient(self) -> None:
        with default_dtype(Precision.FLOAT64):
            x = Tensor([0.3, 0.7], requires_grad=True, name="x")

            def wrong() -> Tensor:
                # The tape records x·1 while the value is x·2 when no tape is active.
                return ops.sum(x * (1.0 if active_tape() is not None else 2.0))

            report = gradcheck(wrong, [x])
        assert not report.passed
        assert report.worst is not None and report.worst.name == "x"

    def test_requires_grad_params(self) -> None:
        with pytest.raises(ValueError):
            gradcheck(lambda: Tensor([1.0]), [Tensor([1.0])])
