import numpy as np
import pytest

from farmrl.enums import Precision
from farmrl.farm import (
    AgentConfig,
    FarmAgent,
    FarmState,
    build_context,
    count_parameters,
    feature_attention,
    share_information,
)
from farmrl.farm.attention import ShareOutput
from farmrl.nets import LSTMState
from farmrl.tensor import ShapeError, Tape, Tensor, default_dtype, gradcheck
from farmrl.tensor import ops


def random_tensor(rng: np.random.Generator, *shape: int, requires_grad: bool = False) -> Tensor:
    return Tensor(rng.normal(size=shape), requires_grad=requires_grad)


def with_module_hidden(state: FarmState, index: int, hidden: np.ndarray) -> FarmState:
    modules = list(state.modules)
    modules[index] = LSTMState(hidden=Tensor(hidden), cell=modules[index].cell)
    return FarmState(encoder=state.encoder, modules=tuple(modules))


class TestFeatureAttention:
    def test_coefficients_shared_across_rows(self) -> None:
        rng = np.random.default_rng(0)
        z, context = random_tensor(rng, 5, 3), random_tensor(rng, 4)
        w_att, w1, w2 = random_tensor(rng, 4, 2), random_tensor(rng, 3, 2), random_tensor(rng, 2, 2)
        out = feature_attention(z, context, w_att, w1, w2)
        coefficients = 1.0 / (1.0 + np.exp(-(context.data @ w_att.data)))
        expected = ((z.data @ w1.data) * coefficients) @ w2.data
        np.testing.assert_allclose(out.features.data, expected, rtol=1e-5)
        np.testing.assert_allclose(out.coefficients.data, coefficients, rtol=1e-6)
        assert np.all((out.coefficients.data > 0) & (out.coefficients.data < 1))

    def test_disabled_attention_uses_unit_coefficients(self) -> None:
        rng = np.random.default_rng(0)
        z, w1, w2 = random_tensor(rng, 5, 3), random_tensor(rng, 3, 2), random_tensor(rng, 2, 2)
        out = feature_attention(z, random_tensor(rng, 4), None, w1, w2)
        np.testing.assert_array_equal(out.coefficients.data, np.ones(2))
        np.testing.assert_allclose(out.features.data, z.data @ w1.data @ w2.data, rtol=1e-5)

    def test_row_permutation_commutes_exactly(self) -> None:
        rng = np.random.default_rng(3)
        w_att, w1, w2 = random_tensor(rng, 5, 6), random_tensor(rng, 8, 6), random_tensor(rng, 6, 6)
        for _ in range(100):
            z, context = random_tensor(rng, 16, 8), random_tensor(rng, 5)
            order = rng.permutation(16)
            permuted = feature_attention(Tensor(z.data[order]), context, w_att, w1, w2)
            original = feature_attention(z, context, w_att, w1, w2)
            np.testing.assert_array_equal(permuted.features.data, original.features.data[order])
            np.testing.assert_array_equal(permuted.coefficients.data, original.coefficients.data)

    def test_feature_dim_mismatch(self) -> None:
        rng = np.random.default_rng(0)
        with pytest.raises(ShapeError, match="d_z"):
            feature_attention(
                random_tensor(rng, 5, 4), random_tensor(rng, 4), None, random_tensor(rng, 3, 2), random_tensor(rng, 2, 2)
            )


class TestInformationSharing:
    def setup_method(self) -> None:
        rng = np.random.default_rng(7)
        self.n, self.d_h, self.heads, self.c = 4, 8, 2, 6
        self.w_q = random_tensor(rng, self.c, self.d_h)
        self.w_k = random_tensor(rng, self.d_h, self.d_h)
        self.w_v = random_tensor(rng, self.d_h, self.heads * self.d_h)
        self.w_o = random_tensor(rng, self.heads * self.d_h, self.d_h)

    def share(self, context: Tensor, h_prev: list[Tensor], key_mask: list[bool] | None = None) -> ShareOutput:
        return share_information(context, h_prev, self.w_q, self.w_k, self.w_v, self.w_o, self.heads, key_mask)

    def test_uniform_read_of_equal_states(self) -> None:
        rng = np.random.default_rng(2)
        h_bar = rng.normal(size=self.d_h)
        out = share_information(
            random_tensor(rng, self.c),
            [Tensor(h_bar) for _ in range(self.n)],
            Tensor.zeros(self.c, self.d_h),
            self.w_k,
            self.w_v,
            self.w_o,
            self.heads,
        )
        np.testing.assert_allclose(out.weights, np.full((self.heads, self.n + 1), 1 / (self.n + 1)))
        values = h_bar @ self.w_v.data
        for k, head in enumerate(out.head_outputs):
            expected = self.n / (self.n + 1) * values[k * self.d_h : (k + 1) * self.d_h]
            np.testing.assert_allclose(head.data, expected, rtol=1e-4, atol=1e-5)

    def test_weights_are_distributions_with_null_row(self) -> None:
        rng = np.random.default_rng(0)
        out = self.share(random_tensor(rng, self.c), [random_tensor(rng, self.d_h) for _ in range(self.n)])
        assert out.weights.shape == (self.heads, self.n + 1)
        np.testing.assert_allclose(out.weights.sum(axis=1), np.ones(self.heads), atol=1e-6)
        assert len(out.head_outputs) == self.heads
        assert out.output.shape == (self.d_h,)

    def test_masked_rows_get_zero_weight(self) -> None:
        rng = np.random.default_rng(0)
        mask = [True] * self.n + [False]
        out = self.share(random_tensor(rng, self.c), [random_tensor(rng, self.d_h) for _ in range(self.n)], mask)
        np.testing.assert_array_equal(out.weights[:, -1], np.zeros(self.heads))

    def test_only_null_row_reads_zero(self) -> None:
        rng = np.random.default_rng(0)
        mask = [False] * self.n + [True]
        out = self.share(random_tensor(rng, self.c), [random_tensor(rng, self.d_h) for _ in range(self.n)], mask)
        np.testing.assert_array_equal(out.output.data, np.zeros(self.d_h))

    def test_bad_mask_length(self) -> None:
        rng = np.random.default_rng(0)
        with pytest.raises(ShapeError):
            self.share(random_tensor(rng, self.c), [random_tensor(rng, self.d_h) for _ in range(self.n)], [True])

    def test_read_is_invariant_to_module_order(self) -> None:
        rng = np.random.default_rng(0)
        with default_dtype(Precision.FLOAT64):
            self.setup_method()
            for _ in range(100):
                context = random_tensor(rng, self.c)
                h_prev = [random_tensor(rng, self.d_h) for _ in range(self.n)]
                perm = rng.permutation(self.n)
                base = self.share(context, h_prev)
                permuted = self.share(context, [h_prev[i] for i in perm])
                np.testing.assert_allclose(permuted.output.data, base.output.data, atol=1e-12)
                np.testing.assert_allclose(permuted.weights[:, :-1], base.weights[:, perm], atol=1e-12)
                np.testing.assert_allclose(permuted.weights[:, -1], base.weights[:, -1], atol=1e-12)


class TestContext:
    def test_layout(self) -> None:
        context = build_context(Tensor([1.0, 2.0]), Tensor([3.0]), 1, 0.5, 3)
        np.testing.assert_array_equal(context.data, [1.0, 2.0, 3.0, 0.0, 1.0, 0.0, 0.5])

    def test_episode_start(self) -> None:
        context = build_context(Tensor([1.0]), Tensor([3.0]), None, 0.0, 2)
        np.testing.assert_array_equal(context.data, [1.0, 3.0, 0.0, 0.0, 0.0])

    def test_action_out_of_range(self) -> None:
        with pytest.raises(ValueError):
            build_context(Tensor([1.0]), Tensor([3.0]), 2, 0.0, 2)


class TestFarmAgent:
    def test_step_shapes(self, tiny_config: AgentConfig, tiny_image: np.ndarray) -> None:
        agent = FarmAgent(tiny_config, seed=0)
        out = agent.step(tiny_image, [2, 3], None, 0.0, agent.initial_state())
        assert out.logits.shape == (3,)
        assert out.value.shape == (1,)
        assert out.policy_state.shape == (16,)
        assert out.diagnostics.module_hidden.shape == (2, 8)
        assert out.diagnostics.coefficients.shape == (2, 4)
        assert out.diagnostics.share_weights is not None
        assert out.diagnostics.share_weights.shape == (2, 2, 3)
        np.testing.assert_allclose(out.diagnostics.module_norms, np.linalg.norm(out.diagnostics.module_hidden, axis=1))

    def test_same_seed_same_parameters(self, tiny_config: AgentConfig) -> None:
        a, b = FarmAgent(tiny_config, seed=3), FarmAgent(tiny_config, seed=3)
        for (name, x), (_, y) in zip(a.named_parameters(), b.named_parameters()):
            np.testing.assert_array_equal(x.data, y.data, err_msg=name)

    def test_zero_init_heads_give_uniform_policy(self, tiny_config: AgentConfig, tiny_image: np.ndarray) -> None:
        config = tiny_config.model_copy(update={"zero_init_heads": True})
        agent = FarmAgent(config, seed=0)
        out = agent.step(tiny_image, [2], None, 0.0, agent.initial_state())
        np.testing.assert_array_equal(out.logits.data, np.zeros(3))

    def test_module_order_does_not_matter(self, tiny_config: AgentConfig, tiny_image: np.ndarray) -> None:
        agent = FarmAgent(tiny_config.with_farm(n_modules=3), seed=0)
        task = agent.encode_task([4, 5])
        state = agent.initial_state()
        forward, _, _ = agent.farm_step(tiny_image, task, 1, 0.5, state)
        backward, _, _ = agent.farm_step(tiny_image, task, 1, 0.5, state, order=[2, 1, 0])
        np.testing.assert_array_equal(forward.data, backward.data)
        with pytest.raises(ValueError, match="permutation"):
            agent.farm_step(tiny_image, task, 1, 0.5, state, order=[0, 0, 1])

    def test_modules_isolated_without_sharing(self, tiny_config: AgentConfig, tiny_image: np.ndarray) -> None:
        agent = FarmAgent(tiny_config.with_farm(sharing_enabled=False), seed=0)
        assert agent.modules[0].W_q is None
        task = agent.encode_task([2])
        state = agent.initial_state()
        perturbed = with_module_hidden(state, 1, np.full(8, 0.9))
        _, base, diag = agent.farm_step(tiny_image, task, None, 0.0, state)
        _, other, _ = agent.farm_step(tiny_image, task, None, 0.0, perturbed)
        assert diag.share_weights is None
        np.testing.assert_array_equal(base.modules[0].hidden.data, other.modules[0].hidden.data)

    def test_modules_communicate_with_sharing(self, tiny_config: AgentConfig, tiny_image: np.ndarray) -> None:
        agent = FarmAgent(tiny_config, seed=0)
        task = agent.encode_task([2])
        state = agent.initial_state()
        perturbed = with_module_hidden(state, 1, np.full(8, 0.9))
        _, base, _ = agent.farm_step(tiny_image, task, None, 0.0, state)
        _, other, _ = agent.farm_step(tiny_image, task, None, 0.0, perturbed)
        assert not np.allclose(base.modules[0].hidden.data, other.modules[0].hidden.data)

    def test_disabled_feature_attention(self, tiny_config: AgentConfig, tiny_image: np.ndarray) -> None:
        agent = FarmAgent(tiny_config.with_farm(feature_attention_enabled=False), seed=0)
        assert agent.modules[0].W_att is None
        assert not any(path.endswith("/W_att") for path in agent.parameter_dict())
        out = agent.step(tiny_image, [2], None, 0.0, agent.initial_state())
        np.testing.assert_array_equal(out.diagnostics.coefficients, np.ones((2, 4)))

    def test_snapshot_round_trip(self, tiny_config: AgentConfig, tiny_image: np.ndarray) -> None:
        agent = FarmAgent(tiny_config, seed=0)
        state = agent.step(tiny_image, [2], None, 0.0, agent.initial_state()).state
        restored = FarmState.from_snapshot(state.snapshot())
        a = agent.step(tiny_image, [2], 1, 0.0, state)
        b = agent.step(tiny_image, [2], 1, 0.0, restored)
        np.testing.assert_array_equal(a.logits.data, b.logits.data)
        np.testing.assert_array_equal(a.value.data, b.value.data)

    def test_state_size_mismatch(self, tiny_config: AgentConfig, tiny_image: np.ndarray) -> None:
        agent = FarmAgent(tiny_config, seed=0)
        bigger = FarmAgent(tiny_config.with_farm(n_modules=3), seed=0)
        task = agent.encode_task([2])
        with pytest.raises(ShapeError):
            agent.farm_step(tiny_image, task, None, 0.0, bigger.initial_state())

    def test_wrong_image_shape(self, tiny_config: AgentConfig) -> None:
        with pytest.raises(ShapeError):
            tiny_config.check_image((9, 9, 3))

    def test_unroll_gradients(self, tiny_config: AgentConfig) -> None:
        rng = np.random.default_rng(0)
        images = [rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8) for _ in range(3)]
        weights = rng.normal(size=(3, 3))
        with default_dtype(Precision.FLOAT64):
            agent = FarmAgent(tiny_config, seed=0)

            def loss() -> Tensor:
                state = agent.initial_state()
                total: Tensor = Tensor([0.0])
                prev_action = None
                for t, image in enumerate(images):
                    out = agent.step(image, [2, 5], prev_action, float(t), state)
                    total = total + ops.sum(out.logits * Tensor(weights[t])) + out.value
                    state, prev_action = out.state, t % 3
                return ops.sum(total)

            report = gradcheck(loss, agent.parameters(), max_entries_per_param=6, tolerance=1e-4)
        assert report.passed, report.worst

    def test_backward_reaches_every_parameter(self, tiny_config: AgentConfig, tiny_image: np.ndarray) -> None:
        agent = FarmAgent(tiny_config, seed=0)
        with Tape() as tape:
            out = agent.step(tiny_image, [2, 3], None, 0.0, agent.initial_state())
            out2 = agent.step(tiny_image, [2, 3], 0, 1.0, out.state)
            loss = ops.sum(out2.logits) + ops.sum(out2.value)
        tape.backward(ops.sum(loss))
        untouched = [name for name, p in agent.named_parameters() if not np.any(p.grad)]
        assert untouched == []


class TestParameterBudgets:
    def test_keybox_agent(self) -> None:
        assert count_parameters(AgentConfig.keybox()) == pytest.approx(7.6e6, rel=0.05)

    def test_ballet_agent(self) -> None:
        assert count_parameters(AgentConfig.ballet()) == pytest.approx(7.1e6, rel=0.05)

    @pytest.mark.parametrize("config,rows", [(AgentConfig.ballet(), 144), (AgentConfig.keybox(), 49)])
    def test_feature_matrix_shape(self, config: AgentConfig, rows: int) -> None:
        agent = FarmAgent(config, seed=0)
        size = config.encoder.image_size
        image = np.zeros((size, size, 3), dtype=np.uint8)
        z, _ = agent.encode_observation(image, agent.initial_state().encoder)
        assert z.shape == (rows, 32)
        assert config.encoder.num_positions == rows
