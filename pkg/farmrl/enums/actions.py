from enum import IntEnum


class BalletAction(IntEnum):
    """Ballet moves the agent by one cell in a cardinal direction, or not at all."""

    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3
    NOOP = 4


class GridAction(IntEnum):
    """The BabyAI action set used by KeyBox, PutNext and AbstractMDP."""

    LEFT = 0
    RIGHT = 1
    FORWARD = 2
    PICKUP = 3
    DROP = 4
    TOGGLE = 5
    DONE = 6
