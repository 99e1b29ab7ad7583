from farmrl.base.str_enum import StrEnum


class Glyph(StrEnum):
    """The filled shape used to draw an object inside its cell."""

    CIRCLE = "circle"
    TRIANGLE = "triangle"
    SQUARE = "square"
    DIAMOND = "diamond"
    CROSS = "cross"
    KEY = "key"
    BOX = "box"
    FULL = "full"
