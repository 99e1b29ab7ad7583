from collections import deque
from collections.abc import Iterable, Iterator

from pydantic import BaseModel, ConfigDict

from farmrl.enums import Color, Glyph, ObjectKind

Position = tuple[int, int]

# Headings index DIRECTIONS: 0 = +x (east), 1 = +y (south), 2 = -x (west), 3 = -y (north).
DIRECTIONS: tuple[Position, ...] = ((1, 0), (0, 1), (-1, 0), (0, -1))
NORTH = 3

_KIND_GLYPHS = {
    ObjectKind.BALL: Glyph.CIRCLE,
    ObjectKind.KEY: Glyph.KEY,
    ObjectKind.BOX: Glyph.BOX,
    ObjectKind.WALL: Glyph.FULL,
}


class WorldObject(BaseModel):
    """
    An object occupying one grid cell.

    Attributes
    ----------
    kind : ObjectKind
        What the object is. Balls, keys and boxes can be picked up in the tasks that allow it; walls never move.
    color : Color
        Palette color. Walls are drawn grey whatever their color.
    glyph : Glyph | None
        Shape to draw. Defaults to the kind's shape; dancers carry an explicit one.
    """

    model_config = ConfigDict(frozen=True)

    kind: ObjectKind
    color: Color = Color.WHITE
    glyph: Glyph | None = None

    @property
    def shape(self) -> Glyph:
        if self.glyph is not None:
            return self.glyph
        return _KIND_GLYPHS.get(self.kind, Glyph.CIRCLE)

    @property
    def descriptor(self) -> tuple[Color, ObjectKind]:
        return self.color, self.kind

    def describe(self) -> str:
        return f"{self.color} {self.kind}"


WALL = WorldObject(kind=ObjectKind.WALL)


def step_position(position: Position, direction: int) -> Position:
    dx, dy = DIRECTIONS[direction]
    return position[0] + dx, position[1] + dy


def neighbors4(position: Position) -> Iterator[Position]:
    for direction in range(4):
        yield step_position(position, direction)


class GridWorld:
    """Integer cell grid holding at most one object per cell, plus the agent pose and what it carries.

    Parameters
    ----------
    width : int
        Number of columns.
    height : int
        Number of rows.
    """

    def __init__(self, width: int, height: int) -> None:
        if width < 1 or height < 1:
            raise ValueError(f"Grid must be at least 1×1, got {width}×{height}.")
        self.width = width
        self.height = height
        self.cells: dict[Position, WorldObject] = {}
        self.agent_pos: Position = (0, 0)
        self.agent_dir: int = NORTH
        self.carrying: WorldObject | None = None

    def in_bounds(self, position: Position) -> bool:
        return 0 <= position[0] < self.width and 0 <= position[1] < self.height

    def get(self, position: Position) -> WorldObject | None:
        return self.cells.get(position)

    def is_empty(self, position: Position) -> bool:
        return self.in_bounds(position) and position not in self.cells

    def place(self, position: Position, obj: WorldObject) -> None:
        if not self.in_bounds(position):
            raise ValueError(f"Cannot place {obj.describe()} at {position}: outside the {self.width}×{self.height} grid.")
        if position in self.cells:
            raise ValueError(f"Cannot place {obj.describe()} at {position}: cell holds {self.cells[position].describe()}.")
        if obj.kind == ObjectKind.WALL and position == self.agent_pos:
            raise ValueError(f"Cannot place a wall on the agent at {position}.")
        self.cells[position] = obj

    def remove(self, position: Position) -> WorldObject:
        if position not in self.cells:
            raise ValueError(f"No object at {position} to remove.")
        return self.cells.pop(position)

    def move(self, source: Position, target: Position) -> None:
        obj = self.remove(source)
        self.place(target, obj)

    def wall_rect(self, x0: int, y0: int, width: int, height: int) -> None:
        """Walls along the border of the given rectangle."""
        for x in range(x0, x0 + width):
            for y in (y0, y0 + height - 1):
                if (x, y) not in self.cells:
                    self.place((x, y), WALL)
        for y in range(y0, y0 + height):
            for x in (x0, x0 + width - 1):
                if (x, y) not in self.cells:
                    self.place((x, y), WALL)

    def empty_cells(self, positions: Iterable[Position]) -> list[Position]:
        """The given cells that hold no object and are not the agent's, in the given order."""
        return [p for p in positions if self.is_empty(p) and p != self.agent_pos]

    @property
    def front_pos(self) -> Position:
        return step_position(self.agent_pos, self.agent_dir)

    def reachable(self, start: Position) -> set[Position]:
        """Object-free cells 4-connected to start, start included."""
        seen = {start}
        queue = deque([start])
        while queue:
            current = queue.popleft()
            for nxt in neighbors4(current):
                if nxt not in seen and self.is_empty(nxt):
                    seen.add(nxt)
                    queue.append(nxt)
        return seen

    def objects(self, kind: ObjectKind | None = None) -> list[tuple[Position, WorldObject]]:
        return sorted(
            (p, o) for p, o in self.cells.items() if kind is None or o.kind == kind
        )
