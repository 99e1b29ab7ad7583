"""The 15 Ballet motion programs.

Each program lists 17 offsets from the dancer's anchor cell, one per step of its 16-step dance. The first and last are
the anchor itself. Steps are unit moves in the king-move sense: one cell along either axis or both, so diagonal steps
are allowed and a dancer never leaves the 3×3 block around its anchor.
"""

from pydantic import BaseModel, ConfigDict

from farmrl.envs.grid import Position

DANCE_STEPS = 16

C: Position = (0, 0)
T: Position = (0, -1)
TR: Position = (1, -1)
R: Position = (1, 0)
BR: Position = (1, 1)
B: Position = (0, 1)
BL: Position = (-1, 1)
L: Position = (-1, 0)
TL: Position = (-1, -1)


class MotionProgram(BaseModel):
    """
    A closed 16-step dance.

    Attributes
    ----------
    id : int
        Index in MOTION_PROGRAMS.
    name : str
        Snake-case name. Its words are the instruction tokens, eg: "circle_cw" -> ["circle", "cw"].
    offsets : tuple[Position, ...]
        17 offsets from the anchor, starting and ending at (0, 0).
    """

    model_config = ConfigDict(frozen=True)

    id: int
    name: str
    offsets: tuple[Position, ...]

    @property
    def tokens(self) -> list[str]:
        return self.name.split("_")

    @property
    def displacements(self) -> list[Position]:
        return [
            (b[0] - a[0], b[1] - a[1]) for a, b in zip(self.offsets[:-1], self.offsets[1:])
        ]

    def offset_at(self, step: int) -> Position:
        """Offset after `step` dance steps; the anchor outside 0..16."""
        if 0 <= step <= DANCE_STEPS:
            return self.offsets[step]
        return C


def _program(index: int, name: str, moves: list[Position]) -> MotionProgram:
    offsets = (C, *moves)
    if len(offsets) != DANCE_STEPS + 1 or offsets[-1] != C:
        raise ValueError(f"Motion {name} must have {DANCE_STEPS} moves ending at the anchor.")
    return MotionProgram(id=index, name=name, offsets=offsets)


_MOVES: list[tuple[str, list[Position]]] = [
    ("circle_cw", [T, R, B, L] * 3 + [T, R, B, C]),
    ("circle_ccw", [T, L, B, R] * 3 + [T, L, B, C]),
    ("square_cw", [T, TR, R, BR, B, BL, L, TL, T, TR, R, BR, B, BL, L, C]),
    ("square_ccw", [T, TL, L, BL, B, BR, R, TR, T, TL, L, BL, B, BR, R, C]),
    ("up_down", [T, C, B, C] * 4),
    ("left_right", [L, C, R, C] * 4),
    ("diag_uldr", [TL, C, BR, C] * 4),
    ("diag_urdl", [TR, C, BL, C] * 4),
    ("plus_cw", [T, C, R, C, B, C, L, C] * 2),
    ("plus_ccw", [T, C, L, C, B, C, R, C] * 2),
    ("times_cw", [TR, C, BR, C, BL, C, TL, C] * 2),
    ("times_ccw", [TL, C, BL, C, BR, C, TR, C] * 2),
    ("zee", [TL, T, TR, C, BL, B, BR, C] * 2),
    ("chevron_up", [L, T, R, C] * 4),
    ("chevron_down", [L, B, R, C] * 4),
]

MOTION_PROGRAMS: tuple[MotionProgram, ...] = tuple(
    _program(i, name, moves) for i, (name, moves) in enumerate(_MOVES)
)


def motion_tokens() -> set[str]:
    return {token for program in MOTION_PROGRAMS for token in program.tokens}
