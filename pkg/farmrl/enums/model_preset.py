from farmrl.base.str_enum import StrEnum


class ModelPreset(StrEnum):
    """This enum represents the agent configurations a run config can start from."""

    KEYBOX = "keybox"
    BALLET = "ballet"
    PUTNEXT = "putnext"
    ABSTRACT_MDP = "abstract_mdp"
    SMOKE = "smoke"
