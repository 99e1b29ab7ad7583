from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from farmrl.farm.attention import feature_attention, share_information
from farmrl.farm.config import AgentConfig
from farmrl.nets import Layer, LSTMCell, LSTMState
from farmrl.nets.init import truncated_normal
from farmrl.tensor import Tensor
from farmrl.tensor import ops


class SharedProjections(Layer):
    """W_1 (d_z×p) and W_2 (p×p), used by every module before and after feature attention."""

    def __init__(self, feature_dim: int, projection_dim: int, rng: np.random.Generator) -> None:
        super().__init__("shared")
        self.W1 = self.add_parameter("W1", truncated_normal(rng, (feature_dim, projection_dim), feature_dim))
        self.W2 = self.add_parameter(
            "W2", truncated_normal(rng, (projection_dim, projection_dim), projection_dim)
        )


class ModuleStepOutput(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    state: LSTMState
    coefficients: np.ndarray
    share_weights: np.ndarray | None


class FarmModule(Layer):
    """One FARM module: its feature-attention and sharing parameters, its LSTM, and its learned initial state.

    Parameters
    ----------
    index : int
        1-based module number, used for the "module{index}" path segment.
    config : AgentConfig
        The agent configuration the module belongs to.
    rng : np.random.Generator
        Source for initial weights.
    """

    def __init__(self, index: int, config: AgentConfig, rng: np.random.Generator) -> None:
        super().__init__(f"module{index}")
        farm = config.farm
        self.index = index
        self.heads = farm.sharing_heads
        self.d_h = farm.d_h
        c_size = config.context_size
        self.W_att: Tensor | None = None
        if farm.feature_attention_enabled:
            self.W_att = self.add_parameter(
                "W_att", truncated_normal(rng, (c_size, farm.projection_dim), c_size)
            )
        self.W_q: Tensor | None = None
        self.W_k: Tensor | None = None
        self.W_v: Tensor | None = None
        self.W_o: Tensor | None = None
        if farm.sharing_enabled:
            self.W_q = self.add_parameter("W_q", truncated_normal(rng, (c_size, farm.d_h), c_size))
            self.W_k = self.add_parameter("W_k", truncated_normal(rng, (farm.d_h, farm.d_h), farm.d_h))
            self.W_v = self.add_parameter(
                "W_v", truncated_normal(rng, (farm.d_h, farm.sharing_heads * farm.d_h), farm.d_h)
            )
            self.W_o = self.add_parameter(
                "W_o",
                truncated_normal(
                    rng, (farm.sharing_heads * farm.d_h, farm.d_h), farm.sharing_heads * farm.d_h
                ),
            )
        self.h0 = self.add_parameter("h0", rng.normal(0.0, farm.init_state_std, farm.d_h))
        self.c0 = self.add_parameter("c0", rng.normal(0.0, farm.init_state_std, farm.d_h))
        lstm_input = c_size + config.encoder.num_positions * farm.projection_dim
        if farm.sharing_enabled:
            lstm_input += farm.d_h
        self.lstm = self.add_child(LSTMCell(lstm_input, farm.d_h, rng))

    @property
    def sharing_enabled(self) -> bool:
        return self.W_q is not None

    def initial_state(self) -> LSTMState:
        return LSTMState(hidden=self.h0, cell=self.c0)

    def step(
        self,
        z: Tensor,
        context: Tensor,
        state: LSTMState,
        h_prev_all: Sequence[Tensor],
        shared: SharedProjections,
    ) -> ModuleStepOutput:
        """Attends to the observation, reads from the other modules, and advances the LSTM one step.

        The LSTM input is concat(c, flatten(attended features), shared read), the last part omitted when sharing is
        disabled.
        """
        attention = feature_attention(z, context, self.W_att, shared.W1, shared.W2)
        parts = [context, ops.flatten(attention.features)]
        share_weights = None
        if self.sharing_enabled:
            assert self.W_q is not None and self.W_k is not None
            assert self.W_v is not None and self.W_o is not None
            share = share_information(
                context, h_prev_all, self.W_q, self.W_k, self.W_v, self.W_o, self.heads
            )
            parts.append(share.output)
            share_weights = share.weights
        next_state = self.lstm.step(ops.concat(parts), state)
        return ModuleStepOutput(
            state=next_state,
            coefficients=attention.coefficients.numpy(),
            share_weights=share_weights,
        )
