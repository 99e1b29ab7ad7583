"""Reference policies that act from the environment itself rather than from observations."""

import numpy as np

from farmrl.enums import BalletAction
from farmrl.envs.ballet import BalletEnv
from farmrl.envs.base import BaseGridEnv


class RandomPolicy:
    """Uniformly random actions."""

    def __init__(self, seed: int = 0) -> None:
        self.rng = np.random.default_rng(seed)

    def begin_episode(self, env: BaseGridEnv) -> None:
        pass

    def act(self, env: BaseGridEnv) -> int:
        return int(self.rng.integers(env.num_actions))


class ChanceBalletPolicy:
    """Picks one dancer uniformly at the start of an episode, waits through the dances, then walks to it.

    The walk alternates axes, moving along whichever has more distance left (horizontal on ties), which never crosses
    another dancer's anchor on the way out of the center. Its success rate is 1/m, the chance level of Ballet.
    """

    def __init__(self, seed: int = 0) -> None:
        self.rng = np.random.default_rng(seed)
        self.choice = 0

    def begin_episode(self, env: BaseGridEnv) -> None:
        if not isinstance(env, BalletEnv):
            raise TypeError(f"ChanceBalletPolicy only plays Ballet, got {env}.")
        self.choice = int(self.rng.integers(env.n_dancers))

    def act(self, env: BaseGridEnv) -> int:
        if not isinstance(env, BalletEnv):
            raise TypeError(f"ChanceBalletPolicy only plays Ballet, got {env}.")
        if not env.in_instruction_phase:
            return int(BalletAction.NOOP)
        x, y = env.require_world().agent_pos
        tx, ty = env.dancers[self.choice].anchor
        dx, dy = tx - x, ty - y
        if dx == 0 and dy == 0:
            return int(BalletAction.NOOP)
        if abs(dx) >= abs(dy):
            return int(BalletAction.RIGHT if dx > 0 else BalletAction.LEFT)
        return int(BalletAction.DOWN if dy > 0 else BalletAction.UP)
