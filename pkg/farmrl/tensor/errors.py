class ShapeError(ValueError):
    """Raised when tensor shapes are incompatible for an operation."""


class BroadcastError(ShapeError):
    """Raised when two shapes fall outside the supported broadcast rules (scalar and row-over-rows)."""


class NonFiniteError(FloatingPointError):
    """Raised when an operation produces NaN or Inf."""


class TapeError(RuntimeError):
    """Raised for invalid use of the gradient tape."""


class CheckpointError(ValueError):
    """Raised when a checkpoint container or its manifest cannot be read or fails verification."""


class CheckpointMismatchError(CheckpointError):
    """Raised when checkpoint entries do not line up with a model's parameters.

    Parameters
    ----------
    diffs : list[str]
        One line per offending parameter path, eg: "farm/module1/lstm/W_ih: checkpoint (1176, 512) != model (1304, 512)".
    """

    def __init__(self, diffs: list[str]) -> None:
        self.diffs = diffs
        super().__init__(
            "Checkpoint does not match the model parameters:\n" + "\n".join(diffs)
        )
