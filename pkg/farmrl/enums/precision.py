import numpy as np

from farmrl.base.str_enum import StrEnum


class Precision(StrEnum):
    """Floating point precision used for tensors. float64 is meant for gradient-check suites."""

    FLOAT32 = "float32"
    FLOAT64 = "float64"

    @property
    def dtype(self) -> type[np.floating]:
        return np.float32 if self is Precision.FLOAT32 else np.float64
