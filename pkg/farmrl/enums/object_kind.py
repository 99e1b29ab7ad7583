from farmrl.base.str_enum import StrEnum


class ObjectKind(StrEnum):
    BALL = "ball"
    KEY = "key"
    BOX = "box"
    DANCER = "dancer"
    WALL = "wall"
