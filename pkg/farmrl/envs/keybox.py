import logging
from collections.abc import Collection

import numpy as np
from tenacity import before_sleep_log, retry, retry_if_exception_type, stop_after_attempt

from farmrl.enums import Color, EnvName, EventTag, GridAction, KeyBoxSetting, ObjectKind
from farmrl.envs.base import BaseGridEnv
from farmrl.envs.errors import LevelGenerationError, UnsolvableLevelError
from farmrl.envs.grid import GridWorld, Position, WorldObject, neighbors4
from farmrl.envs.mechanics import Interaction, apply_action
from farmrl.envs.rendering import EGO_CELL_PX, EGO_VIEW, render_egocentric
from farmrl.envs.results import StepInfo, StepResult

logger = logging.getLogger(__name__)

N_MAX = 10
STEPS_PER_LEVEL = 50
GENERATION_ATTEMPTS = 100


def level_reward(level: int, n_max: int = N_MAX) -> float:
    """Reward for completing a level: n/n_max, capped at 1."""
    return min(level, n_max) / n_max


def level_budget(level: int) -> int:
    return STEPS_PER_LEVEL * level


def hallway_shape(level: int, width: int) -> tuple[int, int]:
    """Grid (width, height) of a hallway of `level` subsections of width×width cells, walls included."""
    return level * width + level + 1, width + 2


def subsection_cells(index: int, width: int) -> list[Position]:
    x0 = index * (width + 1) + 1
    return [(x, y) for y in range(1, width + 1) for x in range(x0, x0 + width)]


class KeyBoxEnv(BaseGridEnv):
    """A hallway of n subsections. The agent starts next to a box; the only key of the box's color lies in the last subsection.

    Toggling the box while holding that key completes the level: the reward is n/n_max and the agent is teleported to a
    freshly generated level n+1. Each level has a budget of 50n steps. The episode ends when a budget runs out or after
    completing level max(n_max, start level), or `max_level` when given.

    Without an explicit level, reset follows the curriculum: the dense setting starts uniformly in [1, n_done], where
    n_done is the level the previous episode ended on, and the sparse setting always starts at level 1.

    Parameters
    ----------
    setting : KeyBoxSetting
        Subsection width and distractors per subsection.
    level : int | None
        Fixed start level, bypassing the curriculum.
    max_level : int | None
        Last level of an episode.
    render : bool
        Produce 56×56 egocentric frames.
    """

    name = EnvName.KEYBOX
    num_actions = len(GridAction)

    def __init__(
        self,
        setting: KeyBoxSetting = KeyBoxSetting.DENSE,
        level: int | None = None,
        max_level: int | None = None,
        render: bool = True,
    ) -> None:
        super().__init__(render)
        if level is not None and level < 1:
            raise ValueError(f"KeyBox levels start at 1, got {level}.")
        if max_level is not None and max_level < 1:
            raise ValueError(f"max_level must be >= 1, got {max_level}.")
        self.setting = setting
        self.fixed_level = level
        self.max_level = max_level
        self.n_done = 1
        self.level = 1
        self.start_level = 1
        self.final_level = N_MAX
        self.level_steps = 0
        self.levels_completed = 0
        self.goal_color = Color.RED
        self.key_pos: Position = (0, 0)
        self.box_pos: Position = (0, 0)

    @property
    def observation_shape(self) -> tuple[int, int, int]:
        return EGO_VIEW * EGO_CELL_PX, EGO_VIEW * EGO_CELL_PX, 3

    @property
    def budget(self) -> int:
        return level_budget(self.level)

    def curriculum_level(self) -> int:
        if self.setting == KeyBoxSetting.SPARSE:
            return 1
        return int(self.rng.integers(1, self.n_done + 1))

    def reset(self, seed: int, level: int | None = None) -> StepResult:
        self.rng = np.random.default_rng(seed)
        self.done = False
        self.t = 0
        self.start_level = level or self.fixed_level or self.curriculum_level()
        self.final_level = max(self.max_level or N_MAX, self.start_level)
        self.levels_completed = 0
        self._enter_level(self.start_level)
        logger.debug(f"KeyBox episode starts on level {self.start_level} (n_done={self.n_done}).")
        return self._result(0.0, [])

    def _enter_level(self, level: int) -> None:
        self.level = level
        self.level_steps = 0
        self.world = self._generate_level(level)

    def _generate_level(self, level: int) -> GridWorld:
        """Lays out the hallway once, then places each subsection's distractors, resampling only a subsection that
        cuts off its exit door, the box or the key."""
        width = self.setting.width
        grid_w, grid_h = hallway_shape(level, width)
        world = GridWorld(grid_w, grid_h)
        world.agent_pos = (-1, -1)
        world.wall_rect(0, 0, grid_w, grid_h)
        doors: list[Position] = []
        for k in range(1, level):
            door = (k * (width + 1), int(self.rng.integers(1, width + 1)))
            doors.append(door)
            for y in range(1, width + 1):
                if y != door[1]:
                    world.place((door[0], y), WorldObject(kind=ObjectKind.WALL))
        approaches = {(x + dx, y) for x, y in doors for dx in (-1, 1)}

        colors = list(Color)
        self.goal_color = colors[int(self.rng.integers(len(colors)))]
        world.agent_dir = int(self.rng.integers(4))
        self.box_pos = self._pick(world, subsection_cells(0, width), avoid=approaches)
        world.place(self.box_pos, WorldObject(kind=ObjectKind.BOX, color=self.goal_color))
        self.key_pos = self._pick(world, subsection_cells(level - 1, width), avoid=approaches)
        world.place(self.key_pos, WorldObject(kind=ObjectKind.KEY, color=self.goal_color))

        for k in range(level):
            try:
                self._place_distractors(world, k, doors, approaches)
            except UnsolvableLevelError as e:
                raise LevelGenerationError(
                    f"No solvable {self.setting} KeyBox level {level}: subsection {k} still cut off after "
                    f"{GENERATION_ATTEMPTS} attempts."
                ) from e
        return world

    @retry(
        stop=stop_after_attempt(GENERATION_ATTEMPTS),
        retry=retry_if_exception_type(UnsolvableLevelError),
        reraise=True,
        before_sleep=before_sleep_log(logger, logging.DEBUG),
    )
    def _place_distractors(self, world: GridWorld, k: int, doors: list[Position], approaches: set[Position]) -> None:
        colors = list(Color)
        other_colors = [c for c in colors if c != self.goal_color]
        placed: list[Position] = []
        try:
            if k == 0:
                world.agent_pos = (-1, -1)
                world.agent_pos = self._pick(world, subsection_cells(0, self.setting.width))
            for _ in range(self.setting.distractors):
                cell = self._pick(world, subsection_cells(k, self.setting.width), avoid=approaches)
                if self.rng.integers(2) == 0:
                    distractor = WorldObject(kind=ObjectKind.BALL, color=colors[int(self.rng.integers(len(colors)))])
                else:
                    distractor = WorldObject(
                        kind=ObjectKind.KEY, color=other_colors[int(self.rng.integers(len(other_colors)))]
                    )
                world.place(cell, distractor)
                placed.append(cell)
            if not self._subsection_open(world, k, doors):
                raise UnsolvableLevelError(f"Subsection {k} of level {len(doors) + 1} is cut off.")
        except UnsolvableLevelError:
            for cell in placed:
                world.remove(cell)
            raise

    def _subsection_open(self, world: GridWorld, k: int, doors: list[Position]) -> bool:
        """Whether subsection k, entered from the agent or its left door, reaches its exit door and its targets."""
        last = len(doors)
        reachable = world.reachable(world.agent_pos if k == 0 else doors[k - 1])
        if k < last and doors[k] not in reachable:
            return False
        if k == 0 and not any(n in reachable for n in neighbors4(self.box_pos)):
            return False
        return k != last or any(n in reachable for n in neighbors4(self.key_pos))

    def _pick(self, world: GridWorld, cells: list[Position], avoid: Collection[Position] = ()) -> Position:
        free = [cell for cell in world.empty_cells(cells) if cell not in avoid]
        if not free:
            raise UnsolvableLevelError("A subsection has no free cell left.")
        return free[int(self.rng.integers(len(free)))]

    def _events(self, interaction: Interaction) -> list[EventTag]:
        tags = []
        if interaction.picked_up is not None:
            tags.append(self._event_for(interaction.picked_up, pickup=True))
        if interaction.dropped is not None:
            tags.append(self._event_for(interaction.dropped, pickup=False))
        return tags

    def _event_for(self, obj: WorldObject, pickup: bool) -> EventTag:
        if obj.kind == ObjectKind.BALL:
            return EventTag.PICKUP_BALL if pickup else EventTag.DROP_BALL
        if obj.color == self.goal_color:
            return EventTag.PICKUP_CORRECT_KEY if pickup else EventTag.DROP_CORRECT_KEY
        return EventTag.PICKUP_WRONG_KEY if pickup else EventTag.DROP_WRONG_KEY

    def _opens_box(self, interaction: Interaction, world: GridWorld) -> bool:
        target = interaction.toggled
        held = world.carrying
        return (
            target is not None
            and target.kind == ObjectKind.BOX
            and target.color == self.goal_color
            and held is not None
            and held.kind == ObjectKind.KEY
            and held.color == self.goal_color
        )

    def step(self, action: int) -> StepResult:
        self.ensure_alive(action)
        world = self.require_world()
        self.t += 1
        self.level_steps += 1
        interaction = apply_action(world, GridAction(int(action)), frozenset({ObjectKind.BALL, ObjectKind.KEY}))
        tags = self._events(interaction)
        reward = 0.0
        if self._opens_box(interaction, world):
            reward = level_reward(self.level)
            self.levels_completed += 1
            logger.debug(f"KeyBox level {self.level} completed at t={self.t}.")
            if self.level >= self.final_level:
                return self._finish(reward, tags)
            self._enter_level(self.level + 1)
        elif self.level_steps >= self.budget:
            return self._finish(reward, tags)
        return self._result(reward, tags)

    def _finish(self, reward: float, tags: list[EventTag]) -> StepResult:
        self.done = True
        self.n_done = self.level
        return self._result(reward, tags, success=self.levels_completed > 0)

    def _result(self, reward: float, tags: list[EventTag], success: bool | None = None) -> StepResult:
        return StepResult(
            observation=self.observe(),
            task_tokens=[],
            reward=reward,
            done=self.done,
            info=StepInfo(t=self.t, level=self.level, event_tags=tags, success=success),
        )

    def render_frame(self) -> np.ndarray:
        return render_egocentric(self.require_world())
