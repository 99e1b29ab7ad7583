from collections.abc import Iterator

import numpy as np
from pydantic import BaseModel, ConfigDict

from farmrl.enums import Color, EnvName, GridAction, ObjectKind
from farmrl.envs.base import BaseGridEnv
from farmrl.envs.grid import NORTH, GridWorld, Position, WorldObject
from farmrl.envs.mechanics import PICKABLE, apply_action
from farmrl.envs.rendering import EGO_CELL_PX, EGO_VIEW, render_egocentric
from farmrl.envs.results import StepInfo, StepResult

N_MDPS = 20
OBJECTS_PER_MDP = 3
MAX_STEPS = 16
ROOM_SIZE = 5
CENTER: Position = (2, 2)
OBJECT_KINDS: tuple[ObjectKind, ...] = (ObjectKind.BALL, ObjectKind.KEY, ObjectKind.BOX)
SLOTS: tuple[Position, ...] = tuple(
    (x, y) for y in range(1, 4) for x in range(1, 4) if (x, y) != CENTER
)


class Placement(BaseModel):
    """Object cells of one abstract MDP. The first cell is the goal slot."""

    model_config = ConfigDict(frozen=True)

    mdp_id: int
    cells: tuple[Position, ...]

    @property
    def goal(self) -> Position:
        return self.cells[0]


def generate_placements(master_seed: int = 0, n_mdps: int = N_MDPS) -> tuple[Placement, ...]:
    """n_mdps placements with pairwise different occupied-cell sets, drawn by rejection sampling."""
    rng = np.random.default_rng(master_seed)
    placements: list[Placement] = []
    seen: set[frozenset[Position]] = set()
    while len(placements) < n_mdps:
        picks = rng.choice(len(SLOTS), size=OBJECTS_PER_MDP, replace=False)
        cells = tuple(SLOTS[int(i)] for i in picks)
        if frozenset(cells) in seen:
            continue
        seen.add(frozenset(cells))
        placements.append(Placement(mdp_id=len(placements), cells=cells))
    return tuple(placements)


class AbstractMDPEnv(BaseGridEnv):
    """A 3×3 room whose object cells are fixed per mdp_id while the objects' kinds and colors change every episode.

    The agent starts in the center facing north. Picking up any object ends the episode, with reward 1 when it was the
    object in the placement's goal slot. Episodes last at most 16 steps.

    Parameters
    ----------
    master_seed : int
        Seed of the fixed placement table.
    render : bool
        Produce 56×56 egocentric frames.
    """

    name = EnvName.ABSTRACT_MDP
    num_actions = len(GridAction)

    def __init__(self, master_seed: int = 0, max_steps: int = MAX_STEPS, render: bool = True) -> None:
        super().__init__(render)
        self.placements = generate_placements(master_seed)
        self.max_steps = max_steps
        self.mdp_id = 0

    @property
    def observation_shape(self) -> tuple[int, int, int]:
        return EGO_VIEW * EGO_CELL_PX, EGO_VIEW * EGO_CELL_PX, 3

    @property
    def placement(self) -> Placement:
        return self.placements[self.mdp_id]

    def reset(self, seed: int, mdp_id: int | None = None) -> StepResult:
        """Starts an episode of the given placement, or of one drawn from the seed when mdp_id is None."""
        if mdp_id is not None and not 0 <= mdp_id < N_MDPS:
            raise ValueError(f"mdp_id must be in 0..{N_MDPS - 1}, got {mdp_id}.")
        self.rng = np.random.default_rng(seed)
        self.mdp_id = int(self.rng.integers(N_MDPS)) if mdp_id is None else mdp_id
        self.done = False
        self.t = 0
        world = GridWorld(ROOM_SIZE, ROOM_SIZE)
        world.agent_pos = (-1, -1)
        world.wall_rect(0, 0, ROOM_SIZE, ROOM_SIZE)
        colors = list(Color)
        for cell in self.placement.cells:
            world.place(
                cell,
                WorldObject(
                    kind=OBJECT_KINDS[int(self.rng.integers(len(OBJECT_KINDS)))],
                    color=colors[int(self.rng.integers(len(colors)))],
                ),
            )
        world.agent_pos = CENTER
        world.agent_dir = NORTH
        self.world = world
        return self._result(0.0)

    def occupied_cells(self) -> frozenset[Position]:
        world = self.require_world()
        return frozenset(p for p, o in world.cells.items() if o.kind != ObjectKind.WALL)

    def step(self, action: int) -> StepResult:
        self.ensure_alive(action)
        world = self.require_world()
        self.t += 1
        interaction = apply_action(world, GridAction(int(action)), PICKABLE)
        if interaction.picked_up is not None:
            self.done = True
            hit = interaction.picked_from == self.placement.goal
            return self._result(1.0 if hit else 0.0, success=hit)
        if self.t >= self.max_steps:
            self.done = True
            return self._result(0.0, success=False)
        return self._result(0.0)

    def _result(self, reward: float, success: bool | None = None) -> StepResult:
        return StepResult(
            observation=self.observe(),
            reward=reward,
            done=self.done,
            info=StepInfo(t=self.t, success=success, mdp_id=self.mdp_id),
        )

    def render_frame(self) -> np.ndarray:
        return render_egocentric(self.require_world())


class ScheduledEpisode(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: int
    mdp_id: int
    seed: int


class AbstractMDPSampler:
    """Round-robin episode schedule over the placements: episode k uses mdp_id k % 20 and a seed derived from (seed, k).

    Parameters
    ----------
    n_episodes : int
        Episodes to draw.
    seed : int
        Base seed for per-episode seeds.
    """

    def __init__(self, n_episodes: int, seed: int = 0) -> None:
        if n_episodes < 0:
            raise ValueError(f"n_episodes must be >= 0, got {n_episodes}.")
        self.n_episodes = n_episodes
        self.seed = seed

    def __len__(self) -> int:
        return self.n_episodes

    def __iter__(self) -> Iterator[ScheduledEpisode]:
        for k in range(self.n_episodes):
            episode_seed = int(np.random.SeedSequence([self.seed, k]).generate_state(1)[0])
            yield ScheduledEpisode(index=k, mdp_id=k % N_MDPS, seed=episode_seed)
