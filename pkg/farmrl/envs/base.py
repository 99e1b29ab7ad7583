from abc import ABC, abstractmethod
from typing import ClassVar

import numpy as np

from farmrl.enums import EnvName
from farmrl.envs.errors import EpisodeDoneError
from farmrl.envs.grid import GridWorld
from farmrl.envs.rendering import render_ascii
from farmrl.envs.results import StepResult


class BaseGridEnv(ABC):
    """A seed-deterministic grid environment. Everything random in an episode comes from the generator created by reset.

    Parameters
    ----------
    render : bool
        When False, observations are None. Used by evaluations that only need rewards.
    """

    name: ClassVar[EnvName]
    num_actions: ClassVar[int]

    def __init__(self, render: bool = True) -> None:
        self.render = render
        self.world: GridWorld | None = None
        self.rng = np.random.default_rng(0)
        self.done = False
        self.t = 0

    @property
    @abstractmethod
    def observation_shape(self) -> tuple[int, int, int]:
        raise NotImplementedError

    @abstractmethod
    def reset(self, seed: int) -> StepResult:
        """Starts a new episode whose randomness is fully determined by the seed."""
        raise NotImplementedError

    @abstractmethod
    def step(self, action: int) -> StepResult:
        """Applies one action.

        Raises
        ------
        EpisodeDoneError
            If the episode already ended.
        """
        raise NotImplementedError

    @abstractmethod
    def render_frame(self) -> np.ndarray:
        """The H×W×3 uint8 observation of the current state."""
        raise NotImplementedError

    def observe(self) -> np.ndarray | None:
        return self.render_frame() if self.render else None

    def render_text(self) -> str:
        return render_ascii(self.require_world())

    def require_world(self) -> GridWorld:
        if self.world is None:
            raise RuntimeError(f"{self.__class__.__name__} has no episode. Call reset(seed) first.")
        return self.world

    def ensure_alive(self, action: int) -> None:
        self.require_world()
        if self.done:
            raise EpisodeDoneError(f"{self.__class__.__name__} episode is over; call reset before stepping again.")
        if not 0 <= int(action) < self.num_actions:
            raise ValueError(f"Action {action} is outside 0..{self.num_actions - 1} for {self.name}.")

    def __str__(self) -> str:
        return self.__class__.__name__ + "()"
