import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from farmrl.farm import StateSnapshot


class StepInput(BaseModel):
    """
    What the agent consumes on one step.

    Attributes
    ----------
    observation : np.ndarray
        H×W×3 uint8 frame.
    task_ids : list[int]
        Vocabulary ids of the instruction, empty when there is none.
    prev_action : int | None
        None on the first step of an episode.
    prev_reward : float
    episode_start : bool
        The recurrent state must be reset to the agent's initial state before this step.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    observation: np.ndarray
    task_ids: list[int] = Field(default_factory=list)
    prev_action: int | None = None
    prev_reward: float = 0.0
    episode_start: bool = False


class EpisodeSummary(BaseModel):
    """One finished episode seen by an actor."""

    actor: int
    episode_return: float
    length: int
    success: bool
    level: int | None = None


class Trajectory(BaseModel):
    """
    An unroll produced by one actor.

    inputs holds one entry more than the unroll has steps: the last one is the input after the final action, used to
    bootstrap the value. The state snapshot is the recurrent state before inputs[0], so the learner can replay the
    actor's forward pass exactly.

    Attributes
    ----------
    actor : int
    initial_state : StateSnapshot
    inputs : list[StepInput]
    actions : list[int]
    rewards : list[float]
    dones : list[bool]
    behavior_logits : np.ndarray
        T×A logits of the acting parameters.
    behavior_values : np.ndarray
        T value estimates of the acting parameters.
    parameter_version : int
        Learner update count of the parameters that acted.
    episodes : list[EpisodeSummary]
        Episodes that ended during this unroll.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    actor: int
    initial_state: StateSnapshot
    inputs: list[StepInput]
    actions: list[int]
    rewards: list[float]
    dones: list[bool]
    behavior_logits: np.ndarray
    behavior_values: np.ndarray
    parameter_version: int = 0
    episodes: list[EpisodeSummary] = Field(default_factory=list)

    @property
    def length(self) -> int:
        return len(self.actions)

    @property
    def frames(self) -> int:
        return len(self.actions)
