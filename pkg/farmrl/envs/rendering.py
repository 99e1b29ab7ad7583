"""Pixel and text rendering of grid worlds.

Objects are flat-colored filled glyphs on a black background. Glyph masks are computed with integer arithmetic only, so
frames are byte-identical across platforms.
"""

from functools import lru_cache

import numpy as np

from farmrl.enums import Color, Glyph, ObjectKind
from farmrl.envs.grid import DIRECTIONS, NORTH, GridWorld, Position, WorldObject

PALETTE: dict[Color, tuple[int, int, int]] = {
    Color.RED: (255, 0, 0),
    Color.GREEN: (0, 255, 0),
    Color.BLUE: (0, 0, 255),
    Color.PURPLE: (112, 39, 195),
    Color.PINK: (255, 105, 180),
    Color.YELLOW: (255, 255, 0),
    Color.WHITE: (255, 255, 255),
}
WALL_RGB = (100, 100, 100)
AGENT_RGB = (255, 128, 0)

EGO_VIEW = 7
EGO_CELL_PX = 8


@lru_cache(maxsize=None)
def glyph_mask(glyph: Glyph, size: int) -> np.ndarray:
    """size×size boolean mask of the glyph. Triangles point north."""
    coords = 2 * np.arange(size) + 1 - size
    u = coords[None, :]
    v = coords[:, None]
    r = size - 3
    square = (np.abs(u) <= r) & (np.abs(v) <= r)
    if glyph == Glyph.FULL:
        mask = np.ones((size, size), dtype=bool)
    elif glyph == Glyph.SQUARE:
        mask = square
    elif glyph == Glyph.CIRCLE:
        mask = u * u + v * v <= r * r
    elif glyph == Glyph.DIAMOND:
        mask = np.abs(u) + np.abs(v) <= r
    elif glyph == Glyph.CROSS:
        mask = square & ((np.abs(u) <= 2) | (np.abs(v) <= 2))
    elif glyph == Glyph.TRIANGLE:
        mask = (v >= -r) & (v <= r) & (2 * np.abs(u) <= v + r)
    elif glyph == Glyph.KEY:
        shaft = (np.abs(u) <= 2) & (np.abs(v) <= r)
        head = (np.abs(u) <= r) & (v >= -r) & (v <= -r + 4)
        tooth = (u >= 0) & (u <= r) & (v >= r - 4) & (v <= r)
        mask = shaft | head | tooth
    elif glyph == Glyph.BOX:
        inner = (np.abs(u) <= r - 4) & (np.abs(v) <= r - 4)
        mask = square & ~inner
    else:
        raise ValueError(f"No mask defined for glyph {glyph}.")
    mask = np.asarray(mask, dtype=bool)
    mask.flags.writeable = False
    return mask


def _object_rgb(obj: WorldObject) -> tuple[int, int, int]:
    return WALL_RGB if obj.kind == ObjectKind.WALL else PALETTE[obj.color]


def _paint(
    frame: np.ndarray, row: int, col: int, cell_px: int, mask: np.ndarray, rgb: tuple[int, int, int]
) -> None:
    tile = frame[row * cell_px : (row + 1) * cell_px, col * cell_px : (col + 1) * cell_px]
    tile[mask] = rgb


def _agent_mask(direction: int, cell_px: int) -> np.ndarray:
    # Clockwise quarter turns from north: east 1, south 2, west 3.
    turns = (direction - NORTH) % 4
    return np.rot90(glyph_mask(Glyph.TRIANGLE, cell_px), k=-turns)


def render_full(
    world: GridWorld,
    cell_px: int,
    agent_glyph: Glyph | None = None,
    agent_rgb: tuple[int, int, int] = AGENT_RGB,
) -> np.ndarray:
    """Top-down H·cell_px × W·cell_px × 3 frame of the whole grid.

    The agent is drawn with agent_glyph when given, otherwise as a triangle pointing along its heading.
    """
    frame = np.zeros((world.height * cell_px, world.width * cell_px, 3), dtype=np.uint8)
    for (x, y), obj in world.cells.items():
        _paint(frame, y, x, cell_px, glyph_mask(obj.shape, cell_px), _object_rgb(obj))
    x, y = world.agent_pos
    mask = glyph_mask(agent_glyph, cell_px) if agent_glyph is not None else _agent_mask(world.agent_dir, cell_px)
    _paint(frame, y, x, cell_px, mask, agent_rgb)
    return frame


def egocentric_cell(world: GridWorld, view_row: int, view_col: int, view_size: int = EGO_VIEW) -> Position:
    """World position shown at (view_row, view_col) of the agent's view. The agent sits at the bottom-center, facing up."""
    forward = DIRECTIONS[world.agent_dir]
    right = DIRECTIONS[(world.agent_dir + 1) % 4]
    ahead = view_size - 1 - view_row
    lateral = view_col - view_size // 2
    return (
        world.agent_pos[0] + forward[0] * ahead + right[0] * lateral,
        world.agent_pos[1] + forward[1] * ahead + right[1] * lateral,
    )


def render_egocentric(
    world: GridWorld, view_size: int = EGO_VIEW, cell_px: int = EGO_CELL_PX
) -> np.ndarray:
    """view_size×view_size cells in front of the agent, rotated so its heading points up. Cells outside the grid are black."""
    frame = np.zeros((view_size * cell_px, view_size * cell_px, 3), dtype=np.uint8)
    for row in range(view_size):
        for col in range(view_size):
            obj = world.get(egocentric_cell(world, row, col, view_size))
            if obj is not None:
                _paint(frame, row, col, cell_px, glyph_mask(obj.shape, cell_px), _object_rgb(obj))
    _paint(frame, view_size - 1, view_size // 2, cell_px, glyph_mask(Glyph.TRIANGLE, cell_px), AGENT_RGB)
    return frame


_ASCII_KINDS = {
    ObjectKind.BALL: "o",
    ObjectKind.KEY: "k",
    ObjectKind.BOX: "x",
    ObjectKind.DANCER: "d",
    ObjectKind.WALL: "#",
}
_ASCII_AGENT = {0: ">", 1: "v", 2: "<", 3: "^"}


def render_ascii(world: GridWorld, agent_char: str | None = None) -> str:
    """One character per cell, rows top to bottom. Objects use their kind letter, upper-cased when red.

    Example
    -------
    >>> print(render_ascii(world))
    #####
    #o^k#
    #####
    """
    lines = []
    for y in range(world.height):
        row = []
        for x in range(world.width):
            if (x, y) == world.agent_pos:
                row.append(agent_char or _ASCII_AGENT[world.agent_dir])
                continue
            obj = world.get((x, y))
            if obj is None:
                row.append(".")
            else:
                char = _ASCII_KINDS[obj.kind]
                row.append(char.upper() if obj.color == Color.RED and obj.kind != ObjectKind.WALL else char)
        lines.append("".join(row))
    if world.carrying is not None:
        lines.append(f"carrying: {world.carrying.describe()}")
    return "\n".join(lines)
