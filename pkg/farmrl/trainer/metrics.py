import math
from pathlib import Path

import pandas as pd
from pydantic import BaseModel

from farmrl.trainer.learner import LearnerStats
from farmrl.trainer.trajectory import EpisodeSummary

METRICS_COLUMNS = [
    "update",
    "frames",
    "episodes",
    "episode_return",
    "success_rate",
    "max_level",
    "total_loss",
    "pg_loss",
    "baseline_loss",
    "entropy",
    "grad_norm",
]


class UpdateMetrics(BaseModel):
    """
    One row of metrics.csv.

    Attributes
    ----------
    update : int
        1-based learner update count.
    frames : int
        Environment steps consumed so far.
    episodes : int
        Episodes that ended during this update's unrolls.
    episode_return : float
        Mean return of those episodes, NaN when none ended.
    success_rate : float
        Fraction of those episodes that succeeded, NaN when none ended.
    max_level : int | None
        Highest KeyBox level any training episode has reached so far.
    total_loss : float
    pg_loss : float
    baseline_loss : float
    entropy : float
    grad_norm : float
        Global gradient norm before clipping.
    """

    update: int
    frames: int
    episodes: int
    episode_return: float
    success_rate: float
    max_level: int | None = None
    total_loss: float
    pg_loss: float
    baseline_loss: float
    entropy: float
    grad_norm: float

    @classmethod
    def from_update(
        cls,
        update: int,
        frames: int,
        episodes: list[EpisodeSummary],
        max_level: int | None,
        stats: LearnerStats,
    ) -> "UpdateMetrics":
        returns = [e.episode_return for e in episodes]
        return cls(
            update=update,
            frames=frames,
            episodes=len(episodes),
            episode_return=sum(returns) / len(returns) if returns else math.nan,
            success_rate=sum(e.success for e in episodes) / len(episodes) if episodes else math.nan,
            max_level=max_level,
            total_loss=stats.total_loss,
            pg_loss=stats.pg_loss,
            baseline_loss=stats.baseline_loss,
            entropy=stats.entropy,
            grad_norm=stats.grad_norm,
        )


class MetricsWriter:
    """Appends UpdateMetrics rows to a CSV with a fixed column order."""

    def __init__(self, path: Path) -> None:
        self.path = path
        self.rows_written = 0
        path.parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(columns=METRICS_COLUMNS).to_csv(path, index=False)

    def write(self, metrics: UpdateMetrics) -> None:
        row = pd.DataFrame([metrics.model_dump()], columns=METRICS_COLUMNS)
        row["max_level"] = row["max_level"].astype("Int64")
        row.to_csv(self.path, mode="a", header=False, index=False)
        self.rows_written += 1


def read_metrics(path: Path) -> pd.DataFrame:
    frame = pd.read_csv(path)
    missing = [c for c in METRICS_COLUMNS if c not in frame.columns]
    if missing:
        raise ValueError(f"{path} is missing metrics columns {missing}.")
    return frame


def frames_to_success(metrics: pd.DataFrame, bound: float) -> int | None:
    """Frames consumed when the training success rate first reached `bound`, or None if it never did.

    Updates where no episode ended have no success rate and are skipped.
    """
    reached = metrics[metrics["success_rate"].notna() & (metrics["success_rate"] >= bound)]
    if reached.empty:
        return None
    return int(reached["frames"].iloc[0])
