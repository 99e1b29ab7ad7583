from farmrl.base.str_enum import StrEnum


class Color(StrEnum):
    """The 7-color object palette shared by every grid environment."""

    RED = "red"
    GREEN = "green"
    BLUE = "blue"
    PURPLE = "purple"
    PINK = "pink"
    YELLOW = "yellow"
    WHITE = "white"
