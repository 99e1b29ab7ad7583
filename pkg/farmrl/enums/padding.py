from farmrl.base.str_enum import StrEnum


class Padding(StrEnum):
    SAME = "same"
    VALID = "valid"
