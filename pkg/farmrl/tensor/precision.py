from collections.abc import Iterator
from contextlib import contextmanager

import numpy as np

from farmrl.enums import Precision

_default_dtype: type[np.floating] = np.float32


def get_default_dtype() -> type[np.floating]:
    """Returns the dtype new tensors are created with."""
    return _default_dtype


def set_default_dtype(precision: Precision | type[np.floating]) -> None:
    """Sets the dtype new tensors are created with. float32 for training, float64 for gradient checks."""
    global _default_dtype
    if isinstance(precision, Precision):
        _default_dtype = precision.dtype
    elif precision in (np.float32, np.float64):
        _default_dtype = precision
    else:
        raise ValueError(
            f"Unsupported precision {precision}. Use one of {Precision.choices()}."
        )


@contextmanager
def default_dtype(precision: Precision | type[np.floating]) -> Iterator[None]:
    """Temporarily switches the global tensor precision.

    Example
    -------
    >>> with default_dtype(Precision.FLOAT64):
    ...     agent = FarmAgent(AgentConfig.tiny(), seed=0)
    """
    previous = get_default_dtype()
    set_default_dtype(precision)
    try:
        yield
    finally:
        set_default_dtype(previous)
