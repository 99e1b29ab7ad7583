import logging
from collections.abc import Callable, Sequence

import numpy as np
from pydantic import BaseModel

from farmrl.tensor.tape import Tape
from farmrl.tensor.tensor import Tensor

logger = logging.getLogger(__name__)


class ParameterGradcheck(BaseModel):
    """
    Gradient-check outcome for one tensor.

    Attributes
    ----------
    name : str
        The tensor's name, or its position in the checked list when unnamed. (eg: farm/module1/W_q)
    entries_checked : int
        How many scalar entries were perturbed.
    max_relative_error : float
        Worst |analytic - numeric| / (|analytic| + |numeric| + 1e-8) over the checked entries.
    worst_index : list[int]
        Multi-index of the worst entry.
    """

    name: str
    entries_checked: int
    max_relative_error: float
    worst_index: list[int]


class GradcheckReport(BaseModel):
    """
    Result of comparing tape gradients against central finite differences.

    Attributes
    ----------
    passed : bool
        Whether every checked entry is within tolerance.
    tolerance : float
        The relative error bound the check was run with.
    step : float
        The finite-difference step h.
    max_relative_error : float
        Worst relative error over all parameters.
    parameters : list[ParameterGradcheck]
        Per-parameter breakdown, in the order the parameters were given.
    """

    passed: bool
    tolerance: float
    step: float
    max_relative_error: float
    parameters: list[ParameterGradcheck]

    @property
    def worst(self) -> ParameterGradcheck | None:
        if not self.parameters:
            return None
        return max(self.parameters, key=lambda p: p.max_relative_error)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    return np.abs(analytic - numeric) / (np.abs(analytic) + np.abs(numeric) + 1e-8)


def _select_entries(
    shape: tuple[int, ...], max_entries: int | None, rng: np.random.Generator
) -> list[tuple[int, ...]]:
    size = int(np.prod(shape)) if shape else 1
    flat = np.arange(size)
    if max_entries is not None and size > max_entries:
        flat = np.sort(rng.choice(size, size=max_entries, replace=False))
    return [tuple(int(i) for i in np.unravel_index(f, shape)) for f in flat]


def gradcheck(
    loss_fn: Callable[[], Tensor],
    params: Sequence[Tensor],
    step: float = 1e-5,
    tolerance: float = 1e-4,
    max_entries_per_param: int | None = None,
    seed: int = 0,
    absolute_tolerance: float = 1e-9,
) -> GradcheckReport:
    """Checks the tape gradients of a scalar loss against central finite differences.

    Run it under `default_dtype(Precision.FLOAT64)`: differences at float32 are dominated by rounding.

    Parameters
    ----------
    loss_fn : Callable[[], Tensor]
        Builds the scalar loss from scratch. Called once under a tape and twice per checked entry without one.
    params : Sequence[Tensor]
        Leaf tensors with requires_grad=True to check.
    step : float
        Finite-difference step h.
    tolerance : float
        Maximum allowed relative error.
    max_entries_per_param : int | None
        When set, only a seeded random sample of this many entries per tensor is perturbed.
    seed : int
        Seed for entry sampling.
    absolute_tolerance : float
        Entries whose analytic and numeric values differ by less than this count as exact. Keeps rounding noise on
        near-zero gradients from dominating the relative error.

    Returns
    -------
    GradcheckReport
        Per-parameter worst errors and the overall verdict.
    """
    for p in params:
        if not p.requires_grad:
            raise ValueError(f"Tensor {p.name} does not require grad and cannot be gradient checked.")
        p.zero_grad()
    with Tape() as tape:
        loss = loss_fn()
    tape.backward(loss)
    analytic = [np.array(p.grad) for p in params]

    rng = np.random.default_rng(seed)
    results: list[ParameterGradcheck] = []
    for position, (p, grad) in enumerate(zip(params, analytic)):
        original = p.numpy()
        worst_error, worst_index = 0.0, [0] * p.ndim
        entries = _select_entries(p.shape, max_entries_per_param, rng)
        for index in entries:
            perturbed = original.copy()
            perturbed[index] = original[index] + step
            p.assign(perturbed)
            loss_plus = loss_fn().item()
            perturbed[index] = original[index] - step
            p.assign(perturbed)
            loss_minus = loss_fn().item()
            p.assign(original)
            numeric = (loss_plus - loss_minus) / (2.0 * step)
            error = float(relative_error(np.asarray(grad[index]), np.asarray(numeric)))
            if abs(float(grad[index]) - numeric) < absolute_tolerance:
                error = 0.0
            if error > worst_error:
                worst_error, worst_index = error, list(index)
        name = p.name or str(position)
        if worst_error > tolerance:
            logger.debug(f"Gradient check of {name} failed at {worst_index}: relative error {worst_error:.3e}")
        results.append(
            ParameterGradcheck(
                name=name,
                entries_checked=len(entries),
                max_relative_error=worst_error,
                worst_index=worst_index,
            )
        )
    overall = max((r.max_relative_error for r in results), default=0.0)
    return GradcheckReport(
        passed=overall <= tolerance,
        tolerance=tolerance,
        step=step,
        max_relative_error=overall,
        parameters=results,
    )
