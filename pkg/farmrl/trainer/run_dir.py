from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import TYPE_CHECKING

from pydantic import BaseModel

from farmrl.trainer.timeline import checkpoint_name

if TYPE_CHECKING:
    from farmrl.run_config import RunConfig

logger = logging.getLogger(__name__)

MANIFEST_NAME = "MANIFEST.sha256"


class RunSummary(BaseModel):
    """
    Written to summary.json when a run finishes.

    Attributes
    ----------
    updates : int
    frames : int
    episodes : int
    success_rate : float | None
        Success rate over the episodes of the last update that ended any.
    max_level : int | None
        Highest KeyBox level reached during training.
    parameters : int
    latest_checkpoint : str | None
        Path relative to the run directory.
    """

    updates: int
    frames: int
    episodes: int
    success_rate: float | None = None
    max_level: int | None = None
    parameters: int
    latest_checkpoint: str | None = None


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class RunDirectory:
    """The on-disk layout of one training run.

    runs/<name>/
        config.toml        copy of the config file the run was started from, when there was one
        config.json        the fully resolved RunConfig
        metrics.csv
        checkpoints/ckpt_<update>.farm (+ .manifest.txt)
        summary.json
        MANIFEST.sha256    sha256 of every file above

    Parameters
    ----------
    path : Path
        The run directory.
    """

    def __init__(self, path: Path) -> None:
        self.path = path

    @property
    def config_copy_path(self) -> Path:
        return self.path / "config.toml"

    @property
    def config_json_path(self) -> Path:
        return self.path / "config.json"

    @property
    def metrics_path(self) -> Path:
        return self.path / "metrics.csv"

    @property
    def checkpoints_dir(self) -> Path:
        return self.path / "checkpoints"

    @property
    def summary_path(self) -> Path:
        return self.path / "summary.json"

    @property
    def manifest_path(self) -> Path:
        return self.path / MANIFEST_NAME

    def checkpoint_path(self, update: int) -> Path:
        return self.checkpoints_dir / checkpoint_name(update)

    def create(self, config: RunConfig, source_text: str | None = None) -> None:
        self.checkpoints_dir.mkdir(parents=True, exist_ok=True)
        if source_text is not None:
            self.config_copy_path.write_text(source_text)
        self.config_json_path.write_text(config.to_json() + "\n")
        logger.info(f"Run directory ready at {self.path}.")

    def load_config(self) -> RunConfig:
        from farmrl.run_config import RunConfig

        return RunConfig.model_validate(json.loads(self.config_json_path.read_text()))

    def write_summary(self, summary: RunSummary) -> None:
        self.summary_path.write_text(summary.model_dump_json(indent=2) + "\n")

    def read_summary(self) -> RunSummary:
        return RunSummary.model_validate_json(self.summary_path.read_text())

    def _tracked_files(self) -> list[Path]:
        return sorted(
            p for p in self.path.rglob("*") if p.is_file() and p.name != MANIFEST_NAME
        )

    def write_manifest(self) -> Path:
        """Records "<sha256>  <relative path>" for every file in the run directory."""
        lines = [f"{sha256_file(p)}  {p.relative_to(self.path).as_posix()}" for p in self._tracked_files()]
        self.manifest_path.write_text("\n".join(lines) + "\n")
        return self.manifest_path

    def verify_manifest(self) -> list[str]:
        """Relative paths whose content no longer matches the manifest, or that went missing."""
        problems = []
        for line in self.manifest_path.read_text().splitlines():
            if not line.strip():
                continue
            expected, relative = line.split("  ", 1)
            file_path = self.path / relative
            if not file_path.is_file() or sha256_file(file_path) != expected:
                problems.append(relative)
        return problems
