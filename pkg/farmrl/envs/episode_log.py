from pathlib import Path
from types import TracebackType

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from farmrl.enums import EventTag


class EpisodeRecord(BaseModel):
    """
    One line of an episode log.

    Attributes
    ----------
    episode_id : int
    t : int
        Step index within the episode, starting at 1 for the first action.
    level : int | None
        KeyBox level the step was taken on.
    action : int
    reward : float
    done : bool
    event_tags : list[EventTag]
    """

    episode_id: int
    t: int
    level: int | None = None
    action: int
    reward: float
    done: bool
    event_tags: list[EventTag] = Field(default_factory=list)


def frame_path(frames_dir: Path, episode_id: int, t: int) -> Path:
    return frames_dir / f"{episode_id:06d}_{t:05d}.npy"


class EpisodeLogger:
    """Writes newline-delimited EpisodeRecords and, optionally, every observation as an H×W×3 uint8 .npy frame.

    Example
    -------
    >>> with EpisodeLogger(run_dir / "episodes.jsonl", frames_dir=run_dir / "frames") as log:
    ...     log.write(record, observation)
    """

    def __init__(self, path: Path, frames_dir: Path | None = None) -> None:
        self.path = path
        self.frames_dir = frames_dir
        path.parent.mkdir(parents=True, exist_ok=True)
        if frames_dir is not None:
            frames_dir.mkdir(parents=True, exist_ok=True)
        self._handle = path.open("w")

    def write(self, record: EpisodeRecord, observation: np.ndarray | None = None) -> None:
        self._handle.write(record.model_dump_json() + "\n")
        if self.frames_dir is not None and observation is not None:
            np.save(frame_path(self.frames_dir, record.episode_id, record.t), observation)

    def write_frame(self, episode_id: int, t: int, observation: np.ndarray) -> None:
        if self.frames_dir is not None:
            np.save(frame_path(self.frames_dir, episode_id, t), observation)

    def close(self) -> None:
        self._handle.close()

    def __enter__(self) -> "EpisodeLogger":
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        tb: TracebackType | None,
    ) -> None:
        self.close()


def read_episode_log(path: Path) -> list[EpisodeRecord]:
    records = []
    for line_number, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(EpisodeRecord.model_validate_json(line))
        except ValidationError as e:
            raise ValueError(f"{path}:{line_number}: invalid episode record: {e}") from e
    return records
