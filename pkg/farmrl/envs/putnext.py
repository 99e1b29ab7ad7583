import numpy as np

from farmrl.enums import Color, EnvName, GridAction, ObjectKind
from farmrl.envs.base import BaseGridEnv
from farmrl.envs.grid import GridWorld, Position, WorldObject, neighbors4
from farmrl.envs.mechanics import PICKABLE, apply_action
from farmrl.envs.rendering import EGO_CELL_PX, EGO_VIEW, render_egocentric
from farmrl.envs.results import StepInfo, StepResult

ROOM_SIZE = 8
INTERIOR = ROOM_SIZE - 2
MAX_STEPS = 128
OBJECT_KINDS: tuple[ObjectKind, ...] = (ObjectKind.BALL, ObjectKind.KEY, ObjectKind.BOX)
# X, Y and the agent, plus one free cell to drop into.
MAX_DISTRACTORS = INTERIOR * INTERIOR - 4


def check_distractors(n_distractors: int) -> None:
    if not 0 <= n_distractors <= MAX_DISTRACTORS:
        raise ValueError(
            f"PutNext fits 0 to {MAX_DISTRACTORS} distractors in its {INTERIOR}×{INTERIOR} room, got {n_distractors}."
        )


def instruction(x: WorldObject, y: WorldObject) -> list[str]:
    return f"put the {x.color} {x.kind} next to the {y.color} {y.kind}".split()


class PutNextEnv(BaseGridEnv):
    """Single room; the instruction names an object X and an object Y. Dropping an object that looks like X in a cell
    4-adjacent to an object that looks like Y gives reward 1 and ends the episode. Distractors may look like X or Y.

    Parameters
    ----------
    n_distractors : int
        Extra random objects in the room.
    max_steps : int
        Steps before the episode times out with reward 0.
    render : bool
        Produce 56×56 egocentric frames.
    """

    name = EnvName.PUTNEXT
    num_actions = len(GridAction)

    def __init__(self, n_distractors: int = 0, max_steps: int = MAX_STEPS, render: bool = True) -> None:
        super().__init__(render)
        check_distractors(n_distractors)
        self.n_distractors = n_distractors
        self.max_steps = max_steps
        self.x_object = WorldObject(kind=ObjectKind.BALL)
        self.y_object = WorldObject(kind=ObjectKind.BOX)
        self.tokens: list[str] = []

    @property
    def observation_shape(self) -> tuple[int, int, int]:
        return EGO_VIEW * EGO_CELL_PX, EGO_VIEW * EGO_CELL_PX, 3

    def _random_object(self) -> WorldObject:
        colors = list(Color)
        return WorldObject(
            kind=OBJECT_KINDS[int(self.rng.integers(len(OBJECT_KINDS)))],
            color=colors[int(self.rng.integers(len(colors)))],
        )

    def _random_cell(self, world: GridWorld, exclude: set[Position] | None = None) -> Position:
        exclude = exclude or set()
        cells = [
            c
            for c in world.empty_cells((x, y) for y in range(1, INTERIOR + 1) for x in range(1, INTERIOR + 1))
            if c not in exclude
        ]
        return cells[int(self.rng.integers(len(cells)))]

    def reset(self, seed: int) -> StepResult:
        self.rng = np.random.default_rng(seed)
        self.done = False
        self.t = 0
        world = GridWorld(ROOM_SIZE, ROOM_SIZE)
        world.agent_pos = (-1, -1)
        world.wall_rect(0, 0, ROOM_SIZE, ROOM_SIZE)
        self.x_object = self._random_object()
        self.y_object = self._random_object()
        while self.y_object.descriptor == self.x_object.descriptor:
            self.y_object = self._random_object()
        y_pos = self._random_cell(world)
        world.place(y_pos, self.y_object)
        x_pos = self._random_cell(world, exclude=set(neighbors4(y_pos)))
        world.place(x_pos, self.x_object)
        world.agent_pos = self._random_cell(world)
        world.agent_dir = int(self.rng.integers(4))
        for _ in range(self.n_distractors):
            world.place(self._random_cell(world), self._random_object())
        self.world = world
        self.tokens = instruction(self.x_object, self.y_object)
        return self._result(0.0)

    def is_success(self, dropped: WorldObject, dropped_at: Position) -> bool:
        if dropped.descriptor != self.x_object.descriptor:
            return False
        world = self.require_world()
        return any(
            (neighbor := world.get(cell)) is not None and neighbor.descriptor == self.y_object.descriptor
            for cell in neighbors4(dropped_at)
        )

    def step(self, action: int) -> StepResult:
        self.ensure_alive(action)
        world = self.require_world()
        self.t += 1
        interaction = apply_action(world, GridAction(int(action)), PICKABLE)
        if (
            interaction.dropped is not None
            and interaction.dropped_at is not None
            and self.is_success(interaction.dropped, interaction.dropped_at)
        ):
            self.done = True
            return self._result(1.0, success=True)
        if self.t >= self.max_steps:
            self.done = True
            return self._result(0.0, success=False)
        return self._result(0.0)

    def _result(self, reward: float, success: bool | None = None) -> StepResult:
        return StepResult(
            observation=self.observe(),
            task_tokens=list(self.tokens),
            reward=reward,
            done=self.done,
            info=StepInfo(t=self.t, success=success),
        )

    def render_frame(self) -> np.ndarray:
        return render_egocentric(self.require_world())
