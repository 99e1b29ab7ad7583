import logging

import numpy as np
from pydantic import BaseModel, ConfigDict

from farmrl.enums import BalletAction, BalletVariant, Color, EnvName, Glyph, ObjectKind
from farmrl.envs.base import BaseGridEnv
from farmrl.envs.grid import GridWorld, Position, WorldObject
from farmrl.envs.motions import DANCE_STEPS, MOTION_PROGRAMS, MotionProgram
from farmrl.envs.rendering import render_full
from farmrl.envs.results import StepInfo, StepResult

logger = logging.getLogger(__name__)

GRID_SIZE = 9
CELL_PX = 11
CENTER: Position = (4, 4)
DELAY_STEPS = 48
MAX_DANCERS = 8
# Block centers of the eight outer 3×3 blocks of the 9×9 grid.
ANCHORS: tuple[Position, ...] = tuple(
    (x, y) for y in (1, 4, 7) for x in (1, 4, 7) if (x, y) != CENTER
)
DANCER_GLYPHS: tuple[Glyph, ...] = (
    Glyph.CIRCLE,
    Glyph.TRIANGLE,
    Glyph.DIAMOND,
    Glyph.CROSS,
    Glyph.KEY,
    Glyph.BOX,
)
_MOVES: dict[BalletAction, Position] = {
    BalletAction.UP: (0, -1),
    BalletAction.DOWN: (0, 1),
    BalletAction.LEFT: (-1, 0),
    BalletAction.RIGHT: (1, 0),
    BalletAction.NOOP: (0, 0),
}


class Dancer(BaseModel):
    model_config = ConfigDict(frozen=True)

    anchor: Position
    program: MotionProgram
    glyph: Glyph
    color: Color
    start: int

    def position_at(self, clock: int) -> Position:
        dx, dy = self.program.offset_at(clock - self.start)
        return self.anchor[0] + dx, self.anchor[1] + dy


def dance_phase_length(n_dancers: int, variant: BalletVariant) -> int:
    """16m + 48(m-1) steps for sequential dances, 16 when everyone dances at once."""
    if variant == BalletVariant.PARALLEL:
        return DANCE_STEPS
    return DANCE_STEPS * n_dancers + DELAY_STEPS * (n_dancers - 1)


class BalletEnv(BaseGridEnv):
    """Dancers perform motion programs around the agent; afterwards the agent is told a program and must go to its dancer.

    During the dance phase the agent may move but stays inside the central 3×3 block, and no reward is given. Once
    the instruction (the target program's name) appears, the agent has `instruction_steps` steps to land on a dancer's
    cell: the target gives reward 1, any other dancer 0. Either ends the episode, as does running out of steps.

    Parameters
    ----------
    n_dancers : int
        Dancers per episode, 1 to 8.
    variant : BalletVariant
        Sequential dances separated by 48-step delays, or all dancers at once.
    instruction_steps : int
        Decision budget once the instruction is shown.
    render : bool
        Produce 99×99 frames.
    """

    name = EnvName.BALLET
    num_actions = len(BalletAction)

    def __init__(
        self,
        n_dancers: int = 2,
        variant: BalletVariant = BalletVariant.SEQUENTIAL,
        instruction_steps: int = 40,
        render: bool = True,
    ) -> None:
        super().__init__(render)
        if not 1 <= n_dancers <= MAX_DANCERS:
            raise ValueError(f"Ballet supports 1 to {MAX_DANCERS} dancers, got {n_dancers}.")
        if instruction_steps < 1:
            raise ValueError(f"instruction_steps must be >= 1, got {instruction_steps}.")
        self.n_dancers = n_dancers
        self.variant = variant
        self.instruction_steps = instruction_steps
        self.dancers: list[Dancer] = []
        self.target = 0

    @property
    def observation_shape(self) -> tuple[int, int, int]:
        return GRID_SIZE * CELL_PX, GRID_SIZE * CELL_PX, 3

    @property
    def dance_length(self) -> int:
        return dance_phase_length(self.n_dancers, self.variant)

    @property
    def in_instruction_phase(self) -> bool:
        return self.t >= self.dance_length

    @property
    def target_dancer(self) -> Dancer:
        return self.dancers[self.target]

    def reset(self, seed: int) -> StepResult:
        self.rng = np.random.default_rng(seed)
        self.done = False
        self.t = 0
        anchors = self.rng.choice(len(ANCHORS), size=self.n_dancers, replace=False)
        programs = self.rng.choice(len(MOTION_PROGRAMS), size=self.n_dancers, replace=False)
        self.dancers = []
        for i in range(self.n_dancers):
            start = 0 if self.variant == BalletVariant.PARALLEL else i * (DANCE_STEPS + DELAY_STEPS)
            self.dancers.append(
                Dancer(
                    anchor=ANCHORS[int(anchors[i])],
                    program=MOTION_PROGRAMS[int(programs[i])],
                    glyph=DANCER_GLYPHS[int(self.rng.integers(len(DANCER_GLYPHS)))],
                    color=list(Color)[int(self.rng.integers(len(Color)))],
                    start=start,
                )
            )
        self.target = int(self.rng.integers(self.n_dancers))
        self.world = GridWorld(GRID_SIZE, GRID_SIZE)
        self.world.agent_pos = CENTER
        self._place_dancers()
        return self._result(0.0)

    def _place_dancers(self) -> None:
        world = self.require_world()
        world.cells.clear()
        for dancer in self.dancers:
            world.place(
                dancer.position_at(self.t),
                WorldObject(kind=ObjectKind.DANCER, color=dancer.color, glyph=dancer.glyph),
            )

    def dancer_at(self, position: Position) -> int | None:
        for i, dancer in enumerate(self.dancers):
            if dancer.position_at(self.t) == position:
                return i
        return None

    def step(self, action: int) -> StepResult:
        self.ensure_alive(action)
        world = self.require_world()
        in_dance = not self.in_instruction_phase
        dx, dy = _MOVES[BalletAction(int(action))]
        x, y = world.agent_pos[0] + dx, world.agent_pos[1] + dy
        if in_dance:
            x = min(max(x, CENTER[0] - 1), CENTER[0] + 1)
            y = min(max(y, CENTER[1] - 1), CENTER[1] + 1)
        else:
            x = min(max(x, 0), GRID_SIZE - 1)
            y = min(max(y, 0), GRID_SIZE - 1)
        world.agent_pos = (x, y)
        self.t += 1
        self._place_dancers()

        reward = 0.0
        if in_dance:
            return self._result(reward)
        reached = self.dancer_at(world.agent_pos)
        if reached is not None:
            self.done = True
            reward = 1.0 if reached == self.target else 0.0
            return self._result(reward, success=reached == self.target)
        if self.t - self.dance_length >= self.instruction_steps:
            self.done = True
            return self._result(reward, success=False)
        return self._result(reward)

    def _result(self, reward: float, success: bool | None = None) -> StepResult:
        instruction = self.in_instruction_phase
        return StepResult(
            observation=self.observe(),
            task_tokens=self.target_dancer.program.tokens if instruction else [],
            reward=reward,
            done=self.done,
            info=StepInfo(
                t=self.t,
                phase="instruction" if instruction else "dance",
                success=success,
            ),
        )

    def render_frame(self) -> np.ndarray:
        return render_full(self.require_world(), CELL_PX, agent_glyph=Glyph.SQUARE, agent_rgb=(255, 255, 255))
