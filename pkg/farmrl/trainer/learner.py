import logging
from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from farmrl.farm import FarmAgent, FarmState
from farmrl.tensor import Tape, Tensor
from farmrl.tensor import ops
from farmrl.trainer.config import TrainerConfig
from farmrl.trainer.losses import compute_loss
from farmrl.trainer.optimizer import Adam
from farmrl.trainer.trajectory import Trajectory
from farmrl.trainer.vtrace import discounts_from_dones, log_probs_of, vtrace_targets

logger = logging.getLogger(__name__)


class Replay(BaseModel):
    """Current-parameter outputs over an unroll, recorded on the active tape."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    logits: Tensor
    values: Tensor
    bootstrap_value: float


class LearnerStats(BaseModel):
    """Summed loss terms of one update, and the gradient norm before clipping."""

    total_loss: float
    pg_loss: float
    baseline_loss: float
    entropy: float
    grad_norm: float
    frames: int


def replay(agent: FarmAgent, trajectory: Trajectory) -> Replay:
    """Re-runs the agent over a trajectory from its stored state, resetting to the initial state at episode starts."""
    state = FarmState.from_snapshot(trajectory.initial_state)
    logits: list[Tensor] = []
    values: list[Tensor] = []
    bootstrap_value = 0.0
    for t, step_input in enumerate(trajectory.inputs):
        if step_input.episode_start:
            state = agent.initial_state()
        output = agent.step(
            step_input.observation,
            step_input.task_ids,
            step_input.prev_action,
            step_input.prev_reward,
            state,
        )
        state = output.state
        if t < trajectory.length:
            logits.append(ops.reshape(output.logits, (1, -1)))
            values.append(output.value)
        else:
            bootstrap_value = output.value.item()
    return Replay(logits=ops.concat(logits, axis=0), values=ops.concat(values), bootstrap_value=bootstrap_value)


class Learner:
    """The only writer of the agent's parameters. One update consumes a batch of trajectories.

    Each trajectory is replayed under its own tape and its loss is backpropagated right away, so gradients add up
    across the batch in actor order before the single optimizer step.

    Parameters
    ----------
    agent : FarmAgent
    config : TrainerConfig
    """

    def __init__(self, agent: FarmAgent, config: TrainerConfig) -> None:
        self.agent = agent
        self.config = config
        self.optimizer = Adam(agent.parameters(), config.optimizer)
        self.version = 0

    def update(self, trajectories: Sequence[Trajectory]) -> LearnerStats:
        if not trajectories:
            raise ValueError("A learner update needs at least one trajectory.")
        loss_cfg = self.config.loss
        self.agent.zero_grad()
        totals = np.zeros(4)
        for trajectory in trajectories:
            with Tape() as tape:
                outputs = replay(self.agent, trajectory)
                actions = np.asarray(trajectory.actions, dtype=np.int64)
                targets = vtrace_targets(
                    behavior_log_probs=log_probs_of(trajectory.behavior_logits, actions),
                    target_log_probs=log_probs_of(outputs.logits.data, actions),
                    rewards=np.asarray(trajectory.rewards),
                    values=outputs.values.data,
                    bootstrap_value=outputs.bootstrap_value,
                    discounts=discounts_from_dones(np.asarray(trajectory.dones), loss_cfg.discount),
                    rho_bar=loss_cfg.rho_bar,
                    c_bar=loss_cfg.c_bar,
                )
                terms = compute_loss(outputs.logits, outputs.values, trajectory.actions, targets, loss_cfg)
            tape.backward(terms.total)
            totals += (terms.total.item(), terms.pg_loss, terms.baseline_loss, terms.entropy)
        grad_norm = self.optimizer.step()
        self.version += 1
        stats = LearnerStats(
            total_loss=float(totals[0]),
            pg_loss=float(totals[1]),
            baseline_loss=float(totals[2]),
            entropy=float(totals[3]),
            grad_norm=grad_norm,
            frames=sum(t.frames for t in trajectories),
        )
        logger.debug(f"Update {self.version}: {stats.model_dump()}")
        return stats
