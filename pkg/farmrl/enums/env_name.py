from farmrl.base.str_enum import StrEnum


class EnvName(StrEnum):
    """This enum represents the grid environments that can be built from an env config."""

    BALLET = "ballet"
    KEYBOX = "keybox"
    PUTNEXT = "putnext"
    ABSTRACT_MDP = "abstractmdp"
