from farmrl.base.str_enum import StrEnum


class EventTag(StrEnum):
    """The perceptual events emitted by KeyBox whenever the agent's inventory changes."""

    PICKUP_BALL = "pickup_ball"
    DROP_BALL = "drop_ball"
    PICKUP_WRONG_KEY = "pickup_wrong_key"
    DROP_WRONG_KEY = "drop_wrong_key"
    PICKUP_CORRECT_KEY = "pickup_correct_key"
    DROP_CORRECT_KEY = "drop_correct_key"
