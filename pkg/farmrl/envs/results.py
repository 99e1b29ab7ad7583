import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from farmrl.enums import EventTag


class StepInfo(BaseModel):
    """
    Diagnostics attached to every step.

    Attributes
    ----------
    t : int
        Steps taken in the episode so far.
    level : int | None
        Current KeyBox level.
    event_tags : list[EventTag]
        Inventory events that happened on this step.
    phase : str | None
        Ballet phase: "dance" or "instruction".
    success : bool | None
        Set on the final step of an episode.
    mdp_id : int | None
        AbstractMDP placement id.
    """

    t: int = 0
    level: int | None = None
    event_tags: list[EventTag] = Field(default_factory=list)
    phase: str | None = None
    success: bool | None = None
    mdp_id: int | None = None


class StepResult(BaseModel):
    """
    What an environment returns from reset and step.

    Attributes
    ----------
    observation : np.ndarray | None
        H×W×3 uint8 frame, or None when the env was built with render=False.
    task_tokens : list[str]
        Instruction words, empty when the task has no instruction (yet).
    reward : float
    done : bool
    info : StepInfo
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    observation: np.ndarray | None
    task_tokens: list[str] = Field(default_factory=list)
    reward: float = 0.0
    done: bool = False
    info: StepInfo = Field(default_factory=StepInfo)
