"""Weight initializers. All take an explicit generator so model construction is seed-deterministic."""

import numpy as np


def truncated_normal(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    """Normal(0, 1/fan_in) values, resampled until every entry lies within two standard deviations."""
    values = rng.standard_normal(shape)
    outside = np.abs(values) > 2.0
    while outside.any():
        values[outside] = rng.standard_normal(int(outside.sum()))
        outside = np.abs(values) > 2.0
    return values / np.sqrt(fan_in)


def orthogonal(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """A rows×cols matrix with orthonormal rows or columns, whichever is fewer."""
    flat = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(flat)
    q = q * np.sign(np.diag(r))
    return q if rows >= cols else q.T


def recurrent_orthogonal(rng: np.random.Generator, hidden: int, n_gates: int) -> np.ndarray:
    """hidden × (n_gates·hidden) recurrent weights built from one orthogonal block per gate."""
    return np.concatenate([orthogonal(rng, hidden, hidden) for _ in range(n_gates)], axis=1)
