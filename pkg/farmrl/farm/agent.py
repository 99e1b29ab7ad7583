import logging
from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from farmrl.farm.attention import build_context
from farmrl.farm.config import AgentConfig
from farmrl.farm.module import FarmModule, SharedProjections
from farmrl.nets import (
    ConvLSTMState,
    GRULanguageEncoder,
    Layer,
    LSTMState,
    MLPHead,
    ObservationEncoder,
    image_to_tensor,
)
from farmrl.tensor import ShapeError, Tensor
from farmrl.tensor import ops

logger = logging.getLogger(__name__)


class StateSnapshot(BaseModel):
    """Detached copy of a FarmState, stored with trajectories so the learner can replay from it."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    encoder_hidden: np.ndarray
    encoder_cell: np.ndarray
    module_hidden: np.ndarray
    module_cell: np.ndarray


class FarmState(BaseModel):
    """Recurrent state of the agent: the ConvLSTM maps and one LSTM state per module."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    encoder: ConvLSTMState
    modules: tuple[LSTMState, ...]

    def snapshot(self) -> StateSnapshot:
        return StateSnapshot(
            encoder_hidden=self.encoder.hidden.numpy(),
            encoder_cell=self.encoder.cell.numpy(),
            module_hidden=np.stack([m.hidden.numpy() for m in self.modules]),
            module_cell=np.stack([m.cell.numpy() for m in self.modules]),
        )

    @classmethod
    def from_snapshot(cls, snapshot: StateSnapshot) -> "FarmState":
        return cls(
            encoder=ConvLSTMState(
                hidden=Tensor(snapshot.encoder_hidden), cell=Tensor(snapshot.encoder_cell)
            ),
            modules=tuple(
                LSTMState(hidden=Tensor(h), cell=Tensor(c))
                for h, c in zip(snapshot.module_hidden, snapshot.module_cell)
            ),
        )


class FarmDiagnostics(BaseModel):
    """
    Per-step internals exposed for analysis.

    Attributes
    ----------
    module_hidden : np.ndarray
        n×d_h hidden states after the step.
    coefficients : np.ndarray
        n×p feature-attention coefficients (all ones when feature attention is disabled).
    share_weights : np.ndarray | None
        n×heads×(n+1) sharing weights, or None when sharing is disabled.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    module_hidden: np.ndarray
    coefficients: np.ndarray
    share_weights: np.ndarray | None

    @property
    def module_norms(self) -> np.ndarray:
        return np.linalg.norm(self.module_hidden, axis=1)

    @property
    def coefficient_norms(self) -> np.ndarray:
        return np.linalg.norm(self.coefficients, axis=1)

    @property
    def module_sums(self) -> np.ndarray:
        return self.module_hidden.sum(axis=1)


class AgentOutput(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    logits: Tensor
    value: Tensor
    policy_state: Tensor
    state: FarmState
    diagnostics: FarmDiagnostics


class FarmAgent(Layer):
    """The full agent: observation encoder, language encoder, n FARM modules and the policy and value heads.

    Parameter paths start with "farm/", eg: "farm/module3/lstm/W_ih", "farm/shared/W1", "farm/encoder/resnet/...".

    Parameters
    ----------
    config : AgentConfig
        Model dimensions and ablation switches.
    seed : int
        Seed for every initial weight.
    """

    def __init__(self, config: AgentConfig, seed: int = 0) -> None:
        super().__init__("farm")
        self.config = config
        rng = np.random.default_rng(seed)
        enc = config.encoder
        self.encoder = self.add_child(
            ObservationEncoder(enc.channels, enc.blocks, enc.kernel_size, enc.feature_dim, rng)
        )
        lang = config.language
        self.language = self.add_child(
            GRULanguageEncoder(lang.vocab_size, lang.embedding_dim, lang.hidden_size, rng)
        )
        self.shared = self.add_child(SharedProjections(enc.feature_dim, config.farm.projection_dim, rng))
        self.modules: list[FarmModule] = [
            self.add_child(FarmModule(i, config, rng)) for i in range(1, config.farm.n_modules + 1)
        ]
        state_size = config.farm.policy_state_size
        self.policy_head = self.add_child(
            MLPHead(state_size, config.head_hidden, config.num_actions, rng, "policy_head", config.zero_init_heads)
        )
        self.value_head = self.add_child(
            MLPHead(state_size, config.head_hidden, 1, rng, "value_head", config.zero_init_heads)
        )
        self.qualify_names()
        logger.debug(f"Built FarmAgent with {self.num_parameters()} parameters.")

    def initial_state(self) -> FarmState:
        """Zero ConvLSTM maps and each module's learned (h0, c0)."""
        size = self.config.encoder.image_size
        return FarmState(
            encoder=self.encoder.initial_state((size, size)),
            modules=tuple(module.initial_state() for module in self.modules),
        )

    def encode_observation(
        self, image: np.ndarray | Tensor, state: ConvLSTMState
    ) -> tuple[Tensor, ConvLSTMState]:
        """Returns Z (m×d_z, spatial rows row-major) and the advanced ConvLSTM state."""
        tensor = image if isinstance(image, Tensor) else image_to_tensor(image)
        return self.encoder(tensor, state)

    def encode_task(self, token_ids: Sequence[int]) -> Tensor:
        return self.language(token_ids)

    def farm_step(
        self,
        image: np.ndarray | Tensor,
        task: Tensor,
        prev_action: int | None,
        prev_reward: float,
        state: FarmState,
        order: Sequence[int] | None = None,
    ) -> tuple[Tensor, FarmState, FarmDiagnostics]:
        """Advances every module against the same snapshot of previous hidden states.

        Parameters
        ----------
        image : np.ndarray | Tensor
            H×W×3 uint8 frame, or a 3×H×W tensor.
        task : Tensor
            Task embedding τ.
        prev_action : int | None
            Previous action, None at episode start.
        prev_reward : float
            Previous reward, 0 at episode start.
        state : FarmState
            Recurrent state from the previous step.
        order : Sequence[int] | None
            0-based order to run the modules in. The result does not depend on it.

        Returns
        -------
        tuple[Tensor, FarmState, FarmDiagnostics]
            s_t (the module hidden states concatenated in module order), the next state and diagnostics.
        """
        if len(state.modules) != len(self.modules):
            raise ShapeError(f"State holds {len(state.modules)} module states, agent has {len(self.modules)}.")
        z, encoder_state = self.encode_observation(image, state.encoder)
        h_prev = [module_state.hidden for module_state in state.modules]
        run_order = list(order) if order is not None else list(range(len(self.modules)))
        if sorted(run_order) != list(range(len(self.modules))):
            raise ValueError(f"Module order {run_order} is not a permutation of 0..{len(self.modules) - 1}.")
        outputs = {}
        for i in run_order:
            context = build_context(task, h_prev[i], prev_action, prev_reward, self.config.num_actions)
            outputs[i] = self.modules[i].step(z, context, state.modules[i], h_prev, self.shared)
        ordered = [outputs[i] for i in range(len(self.modules))]
        policy_state = ops.concat([o.state.hidden for o in ordered])
        diagnostics = FarmDiagnostics(
            module_hidden=np.stack([o.state.hidden.numpy() for o in ordered]),
            coefficients=np.stack([o.coefficients for o in ordered]),
            share_weights=(
                np.stack([o.share_weights for o in ordered])
                if ordered[0].share_weights is not None
                else None
            ),
        )
        next_state = FarmState(encoder=encoder_state, modules=tuple(o.state for o in ordered))
        return policy_state, next_state, diagnostics

    def policy_value_heads(self, policy_state: Tensor) -> tuple[Tensor, Tensor]:
        """Unnormalized action logits and a length-1 value estimate."""
        return self.policy_head(policy_state), self.value_head(policy_state)

    def step(
        self,
        image: np.ndarray | Tensor,
        token_ids: Sequence[int],
        prev_action: int | None,
        prev_reward: float,
        state: FarmState,
    ) -> AgentOutput:
        task = self.encode_task(token_ids)
        policy_state, next_state, diagnostics = self.farm_step(
            image, task, prev_action, prev_reward, state
        )
        logits, value = self.policy_value_heads(policy_state)
        return AgentOutput(
            logits=logits,
            value=value,
            policy_state=policy_state,
            state=next_state,
            diagnostics=diagnostics,
        )


def count_parameters(config: AgentConfig) -> int:
    """Number of trainable scalars in an agent built from the config."""
    return FarmAgent(config, seed=0).num_parameters()
