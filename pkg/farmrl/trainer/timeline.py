import re
from pathlib import Path

from farmrl.tensor import CheckpointError

CHECKPOINT_PATTERN = re.compile(r"^ckpt_(\d{8})\.farm$")
FIRST = "first"
LATEST = "latest"


def checkpoint_name(update: int) -> str:
    return f"ckpt_{update:08d}.farm"


class CheckpointsTimeline:
    """The checkpoints of one run, ordered by the learner update they were written after.

    Parameters
    ----------
    checkpoints_dir : Path
        The run's checkpoints/ directory.

    Attributes
    ----------
    checkpoints_map : dict[int, Path]
        Checkpoint files keyed by update number.
    """

    checkpoints_dir: Path
    checkpoints_map: dict[int, Path]

    def __init__(self, checkpoints_dir: Path) -> None:
        self.checkpoints_dir = checkpoints_dir
        if not checkpoints_dir.is_dir():
            raise CheckpointError(f"No checkpoints directory found at {checkpoints_dir}.")
        self.checkpoints_map = {}
        for file_path in checkpoints_dir.iterdir():
            match = CHECKPOINT_PATTERN.match(file_path.name)
            if file_path.is_file() and match:
                self.checkpoints_map[int(match.group(1))] = file_path

    @property
    def updates(self) -> list[int]:
        return sorted(self.checkpoints_map)

    def get_first_checkpoint(self) -> Path:
        if not self.checkpoints_map:
            raise CheckpointError(f"{self.checkpoints_dir} holds no checkpoints.")
        return self.checkpoints_map[self.updates[0]]

    def get_latest_checkpoint(self) -> Path:
        if not self.checkpoints_map:
            raise CheckpointError(f"{self.checkpoints_dir} holds no checkpoints.")
        return self.checkpoints_map[self.updates[-1]]

    def get_checkpoint(self, update: int) -> Path:
        if update not in self.checkpoints_map:
            raise CheckpointError(
                f"No checkpoint for update {update} in {self.checkpoints_dir}. Available: {self.updates}."
            )
        return self.checkpoints_map[update]

    def get_nth_checkpoint(self, update: int, steps: int) -> Path:
        """The checkpoint `steps` positions after (or before, when negative) the one written at `update`."""
        self.get_checkpoint(update)
        position = self.updates.index(update) + steps
        if not 0 <= position < len(self.updates):
            raise CheckpointError(f"No checkpoint {steps} steps from update {update}.")
        return self.checkpoints_map[self.updates[position]]


def resolve_checkpoint(reference: str | Path) -> Path:
    """Resolves a checkpoint file, or a run directory plus a selector: "first", "latest" (the default), "latest~N"
    (N checkpoints before the latest) or an update number.

    eg: "runs/keybox", "runs/keybox:first", "runs/keybox:latest~2", "runs/keybox:1200",
    "runs/keybox/checkpoints/ckpt_00001200.farm".
    """
    text = str(reference)
    selector = LATEST
    if ":" in text and not Path(text).exists():
        text, selector = text.rsplit(":", 1)
    path = Path(text)
    if path.is_file():
        return path
    checkpoints_dir = path / "checkpoints" if (path / "checkpoints").is_dir() else path
    timeline = CheckpointsTimeline(checkpoints_dir)
    if selector == FIRST:
        return timeline.get_first_checkpoint()
    if selector == LATEST:
        return timeline.get_latest_checkpoint()
    back = selector.removeprefix(f"{LATEST}~")
    if back != selector and back.isdigit():
        if not timeline.updates:
            raise CheckpointError(f"{checkpoints_dir} holds no checkpoints.")
        return timeline.get_nth_checkpoint(timeline.updates[-1], -int(back))
    if not selector.isdigit():
        raise CheckpointError(
            f"Checkpoint selector must be '{FIRST}', '{LATEST}', '{LATEST}~N' or an update number, got {selector!r}."
        )
    return timeline.get_checkpoint(int(selector))
