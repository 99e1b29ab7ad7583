from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from farmrl.tensor import ShapeError, Tensor
from farmrl.tensor import ops
from farmrl.trainer.config import LossConfig
from farmrl.trainer.vtrace import VTraceReturns


class LossTerms(BaseModel):
    """
    The total loss tensor and its components as plain floats.

    Attributes
    ----------
    total : Tensor
        pg_loss + baseline_cost·baseline_loss - entropy_cost·entropy.
    pg_loss : float
    baseline_loss : float
    entropy : float
        Summed per-step policy entropy (a bonus, so it enters the total negated).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    total: Tensor
    pg_loss: float
    baseline_loss: float
    entropy: float


def compute_loss(
    logits: Tensor,
    values: Tensor,
    actions: Sequence[int],
    targets: VTraceReturns,
    config: LossConfig,
    mask: np.ndarray | None = None,
) -> LossTerms:
    """V-trace actor-critic loss over one unroll.

    Parameters
    ----------
    logits : Tensor
        T×A policy logits under the current parameters.
    values : Tensor
        T value estimates under the current parameters.
    actions : Sequence[int]
        The T actions taken.
    targets : VTraceReturns
        Constant targets for the same unroll.
    config : LossConfig
    mask : np.ndarray | None
        1 for steps that belong to the unroll, 0 for padding. Defaults to all ones.

    Returns
    -------
    LossTerms
    """
    steps, num_actions = logits.shape
    if values.shape != (steps,) or len(actions) != steps:
        raise ShapeError(
            f"Loss inputs disagree: logits {logits.shape}, values {values.shape}, {len(actions)} actions."
        )
    weights = np.ones(steps) if mask is None else np.asarray(mask, dtype=np.float64)
    chosen = np.zeros((steps, num_actions))
    chosen[np.arange(steps), np.asarray(actions, dtype=np.int64)] = 1.0

    log_policy = ops.log_softmax(logits, axis=1)
    action_log_probs = ops.sum(ops.mul(log_policy, Tensor(chosen)), axis=1)
    pg_loss = ops.neg(ops.sum(ops.mul(action_log_probs, Tensor(weights * targets.pg_advantages))))

    errors = ops.sub(Tensor(targets.vs), values)
    baseline_loss = ops.sum(ops.mul(ops.square(errors), Tensor(weights)))

    policy = ops.softmax(logits, axis=1)
    step_entropy = ops.neg(ops.sum(ops.mul(policy, log_policy), axis=1))
    entropy = ops.sum(ops.mul(step_entropy, Tensor(weights)))

    total = pg_loss + baseline_loss * config.baseline_cost - entropy * config.entropy_cost
    return LossTerms(
        total=total,
        pg_loss=pg_loss.item(),
        baseline_loss=baseline_loss.item(),
        entropy=entropy.item(),
    )
