"""V-trace off-policy corrected value targets and policy-gradient advantages.

All inputs are numpy arrays over one unroll of length T. Targets are constants for the loss, so they are computed
outside the tape.
"""

import numpy as np
from pydantic import BaseModel, ConfigDict

from farmrl.tensor import NonFiniteError


class VTraceReturns(BaseModel):
    """
    Attributes
    ----------
    vs : np.ndarray
        Value targets v_s, shape (T,).
    pg_advantages : np.ndarray
        ρ_s·(r_s + γ_s·v_{s+1} - V(x_s)), shape (T,).
    clipped_rhos : np.ndarray
        min(ρ̄, π/μ), shape (T,).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    vs: np.ndarray
    pg_advantages: np.ndarray
    clipped_rhos: np.ndarray


def log_probs_of(logits: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """log π(a_t) for a T×A logits matrix and T actions."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    return shifted[np.arange(len(actions)), actions] - log_norm


def discounts_from_dones(dones: np.ndarray, discount: float) -> np.ndarray:
    """γ after steps that continue the episode, 0 after steps that end it."""
    return discount * (1.0 - np.asarray(dones, dtype=np.float64))


def vtrace_targets(
    behavior_log_probs: np.ndarray,
    target_log_probs: np.ndarray,
    rewards: np.ndarray,
    values: np.ndarray,
    bootstrap_value: float,
    discounts: np.ndarray,
    rho_bar: float = 1.0,
    c_bar: float = 1.0,
) -> VTraceReturns:
    """Runs the V-trace recursion backwards over the unroll.

    Parameters
    ----------
    behavior_log_probs : np.ndarray
        log μ(a_t) under the parameters that acted.
    target_log_probs : np.ndarray
        log π(a_t) under the current parameters.
    rewards : np.ndarray
    values : np.ndarray
        V(x_t) under the current parameters.
    bootstrap_value : float
        V(x_T).
    discounts : np.ndarray
        γ_t, zero where step t ended an episode.
    rho_bar : float
    c_bar : float

    Raises
    ------
    NonFiniteError
        If any importance ratio is NaN or infinite.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        rhos = np.exp(np.asarray(target_log_probs, dtype=np.float64) - np.asarray(behavior_log_probs, dtype=np.float64))
    if not np.all(np.isfinite(rhos)):
        raise NonFiniteError(f"V-trace importance ratios are not finite: {rhos.tolist()}.")
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    discounts = np.asarray(discounts, dtype=np.float64)
    clipped_rhos = np.minimum(rho_bar, rhos)
    cs = np.minimum(c_bar, rhos)
    next_values = np.append(values[1:], bootstrap_value)
    deltas = clipped_rhos * (rewards + discounts * next_values - values)

    vs_minus_v = np.zeros_like(values)
    acc = 0.0
    for t in reversed(range(len(values))):
        acc = deltas[t] + discounts[t] * cs[t] * acc
        vs_minus_v[t] = acc
    vs = vs_minus_v + values

    next_vs = np.append(vs[1:], bootstrap_value)
    pg_advantages = clipped_rhos * (rewards + discounts * next_vs - values)
    return VTraceReturns(vs=vs, pg_advantages=pg_advantages, clipped_rhos=clipped_rhos)
