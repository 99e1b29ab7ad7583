from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from farmrl.enums import EnvName, KeyBoxSetting
from farmrl.envs import EnvConfig, RandomPolicy
from farmrl.farm import FarmAgent
from farmrl.nets import Vocabulary
from farmrl.run_config import RunConfig
from farmrl.tensor import CheckpointError, load_checkpoint
from farmrl.tests.conftest import small_agent_config
from farmrl.trainer import (
    METRICS_COLUMNS,
    CheckpointsTimeline,
    RunDirectory,
    Trainer,
    evaluate,
    evaluate_policy,
    frames_to_success,
    read_metrics,
    resolve_checkpoint,
    train,
)
from farmrl.trainer.evaluate import EpisodeOutcome, build_report
from farmrl.trainer.timeline import checkpoint_name
from farmrl.trainer.train import checked_vocabulary


def run_smoke(config: RunConfig) -> RunDirectory:
    run_dir = RunDirectory(config.out)
    run_dir.create(config, source_text="seed = 0\n")
    train(config, run_dir)
    return run_dir


class TestTrainingRun:
    def test_run_directory_layout(self, smoke_run_config: RunConfig) -> None:
        run_dir = run_smoke(smoke_run_config)
        assert run_dir.config_copy_path.read_text() == "seed = 0\n"
        assert run_dir.load_config() == smoke_run_config
        assert sorted(p.name for p in run_dir.checkpoints_dir.glob("*.farm")) == [
            checkpoint_name(1),
            checkpoint_name(2),
        ]
        summary = run_dir.read_summary()
        assert summary.updates == 2
        assert summary.frames == 12
        assert summary.latest_checkpoint == f"checkpoints/{checkpoint_name(2)}"
        assert run_dir.verify_manifest() == []

    def test_metrics_csv(self, smoke_run_config: RunConfig) -> None:
        run_dir = run_smoke(smoke_run_config)
        metrics = read_metrics(run_dir.metrics_path)
        assert list(metrics.columns) == METRICS_COLUMNS
        assert metrics["update"].tolist() == [1, 2]
        assert metrics["frames"].tolist() == [6, 12]
        assert np.isfinite(metrics["total_loss"]).all()

    def test_frames_to_success(self) -> None:
        metrics = pd.DataFrame({"frames": [80, 160, 240, 320], "success_rate": [0.5, np.nan, 0.95, 0.7]})
        assert frames_to_success(metrics, 0.9) == 240
        assert frames_to_success(metrics, 0.99) is None

    def test_manifest_detects_edits(self, smoke_run_config: RunConfig) -> None:
        run_dir = run_smoke(smoke_run_config)
        run_dir.summary_path.write_text("{}")
        run_dir.checkpoint_path(1).unlink()
        assert run_dir.verify_manifest() == [f"checkpoints/{checkpoint_name(1)}", "summary.json"]

    def test_runs_are_reproducible(self, smoke_run_config: RunConfig, tmp_path: Path) -> None:
        first = run_smoke(smoke_run_config)
        second = run_smoke(smoke_run_config.with_changes(out=tmp_path / "again"))
        a = load_checkpoint(first.checkpoint_path(2))
        b = load_checkpoint(second.checkpoint_path(2))
        assert a.keys() == b.keys()
        for name in a:
            np.testing.assert_array_equal(a[name], b[name])
        assert first.metrics_path.read_text() == second.metrics_path.read_text()

    def test_without_run_directory(self, smoke_run_config: RunConfig) -> None:
        trainer = Trainer(smoke_run_config.with_changes(trainer={"total_frames": 6}))
        metrics = list(trainer.run())
        assert len(metrics) == 1
        assert trainer.save_checkpoint() is None
        assert not smoke_run_config.out.exists()

    def test_stale_actors_refresh_alternating_halves(self, smoke_run_config: RunConfig) -> None:
        trainer = Trainer(smoke_run_config.with_changes(trainer={"stale_actors": True, "total_frames": 12}))
        versions = []
        for _ in trainer.run():
            versions.append([actor.parameter_version for actor in trainer.actors])
        assert versions == [[0, 1], [2, 1]]

    def test_vocabulary_must_fit_the_embedding(self) -> None:
        with pytest.raises(ValueError, match="only embeds 4"):
            checked_vocabulary(4)


class TestTimeline:
    def make_checkpoints(self, root: Path, updates: list[int]) -> Path:
        checkpoints = root / "checkpoints"
        checkpoints.mkdir(parents=True)
        for update in updates:
            (checkpoints / checkpoint_name(update)).write_bytes(b"")
        (checkpoints / "notes.txt").write_text("ignored")
        return checkpoints

    def test_ordering(self, tmp_path: Path) -> None:
        timeline = CheckpointsTimeline(self.make_checkpoints(tmp_path, [50, 150, 100]))
        assert timeline.updates == [50, 100, 150]
        assert timeline.get_first_checkpoint().name == checkpoint_name(50)
        assert timeline.get_latest_checkpoint().name == checkpoint_name(150)
        assert timeline.get_nth_checkpoint(50, 2).name == checkpoint_name(150)
        assert timeline.get_nth_checkpoint(100, -1).name == checkpoint_name(50)
        with pytest.raises(CheckpointError):
            timeline.get_nth_checkpoint(150, 1)
        with pytest.raises(CheckpointError, match="Available"):
            timeline.get_checkpoint(75)

    def test_missing_directory(self, tmp_path: Path) -> None:
        with pytest.raises(CheckpointError, match="No checkpoints directory"):
            CheckpointsTimeline(tmp_path / "nope")

    def test_resolve_checkpoint(self, tmp_path: Path) -> None:
        checkpoints = self.make_checkpoints(tmp_path / "run", [1, 20])
        run = tmp_path / "run"
        assert resolve_checkpoint(run) == checkpoints / checkpoint_name(20)
        assert resolve_checkpoint(f"{run}:latest") == checkpoints / checkpoint_name(20)
        assert resolve_checkpoint(f"{run}:1") == checkpoints / checkpoint_name(1)
        file_path = checkpoints / checkpoint_name(1)
        assert resolve_checkpoint(file_path) == file_path
        assert resolve_checkpoint(f"{run}:first") == checkpoints / checkpoint_name(1)
        assert resolve_checkpoint(f"{run}:latest~1") == checkpoints / checkpoint_name(1)
        with pytest.raises(CheckpointError, match="steps from update 20"):
            resolve_checkpoint(f"{run}:latest~2")
        with pytest.raises(CheckpointError, match="selector"):
            resolve_checkpoint(f"{run}:oldest")


class TestEvaluate:
    def test_zero_episodes_is_an_empty_report(self, small_agent: FarmAgent, vocabulary: Vocabulary) -> None:
        report = evaluate(small_agent, EnvConfig(name=EnvName.ABSTRACT_MDP), vocabulary, 0)
        assert report.episodes == 0
        assert report.mean_success is None
        assert report.outcomes == []

    def test_negative_episodes_rejected(self, small_agent: FarmAgent, vocabulary: Vocabulary) -> None:
        with pytest.raises(ValueError):
            evaluate(small_agent, EnvConfig(name=EnvName.ABSTRACT_MDP), vocabulary, -1)

    def test_agent_evaluation_is_reproducible(self, vocabulary: Vocabulary) -> None:
        agent = FarmAgent(small_agent_config(), seed=0)
        env_config = EnvConfig(name=EnvName.ABSTRACT_MDP)
        first = evaluate(agent, env_config, vocabulary, 3, seed=4)
        second = evaluate(agent, env_config, vocabulary, 3, seed=4)
        assert first == second
        assert first.episodes == 3
        assert all(o.length <= 16 for o in first.outcomes)

    def test_per_level_breakdown(self) -> None:
        outcomes = [
            EpisodeOutcome(episode=0, seed=0, episode_return=1.0, length=5, success=True, level=1),
            EpisodeOutcome(episode=1, seed=1, episode_return=0.0, length=9, success=False, level=1),
            EpisodeOutcome(episode=2, seed=2, episode_return=1.0, length=7, success=True, level=3),
        ]
        report = build_report(EnvConfig(name=EnvName.KEYBOX), outcomes)
        assert report.mean_success == pytest.approx(2 / 3)
        assert [(row.level, row.episodes, row.success_rate) for row in report.per_level] == [(1, 2, 0.5), (3, 1, 1.0)]
        assert report.stderr == pytest.approx(np.std([1, 0, 1], ddof=1) / np.sqrt(3))
        assert len(report.to_frame()) == 3

    def test_random_policy_on_keybox(self) -> None:
        env_config = EnvConfig(name=EnvName.KEYBOX, setting=KeyBoxSetting.DENSE, level=1, max_level=1)
        report = evaluate_policy(RandomPolicy(0), env_config, 2)
        assert report.episodes == 2
        assert [row.level for row in report.per_level] == [1]
