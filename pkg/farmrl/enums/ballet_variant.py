from farmrl.base.str_enum import StrEnum


class BalletVariant(StrEnum):
    """Whether the dancers of a Ballet episode dance one after another or all at once."""

    SEQUENTIAL = "sequential"
    PARALLEL = "parallel"
