from __future__ import annotations

import logging
from collections.abc import Iterator
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import TYPE_CHECKING

from farmrl.envs import instruction_vocabulary
from farmrl.farm import FarmAgent
from farmrl.nets import Vocabulary
from farmrl.tensor import save_checkpoint, set_default_dtype
from farmrl.trainer.actor import Actor
from farmrl.trainer.learner import Learner
from farmrl.trainer.metrics import MetricsWriter, UpdateMetrics
from farmrl.trainer.run_dir import RunDirectory, RunSummary
from farmrl.trainer.trajectory import EpisodeSummary, Trajectory

if TYPE_CHECKING:
    from farmrl.run_config import RunConfig

logger = logging.getLogger(__name__)


def checked_vocabulary(vocab_size: int) -> Vocabulary:
    """The instruction vocabulary, validated against the capacity of the language embedding."""
    vocabulary = instruction_vocabulary()
    if len(vocabulary) > vocab_size:
        raise ValueError(
            f"The instruction vocabulary has {len(vocabulary)} words but the language encoder only embeds {vocab_size}."
        )
    return vocabulary


class Trainer:
    """Synchronous actor-learner loop.

    Every update, the actors each produce one unroll in parallel threads, the learner consumes the batch in actor
    order and takes one optimizer step, and the actors receive the new parameters. With stale_actors, only one half of
    the actors (alternating) is refreshed per update, so the other half acts with parameters one update old.

    Parameters
    ----------
    config : RunConfig
    run_dir : RunDirectory | None
        Where to write metrics, checkpoints and the summary. Nothing is written when None.
    """

    def __init__(self, config: RunConfig, run_dir: RunDirectory | None = None) -> None:
        self.config = config
        self.run_dir = run_dir
        set_default_dtype(config.trainer.precision)
        agent_config = config.agent_config
        self.agent = FarmAgent(agent_config, seed=config.seed)
        self.vocabulary = checked_vocabulary(agent_config.language.vocab_size)
        self.actors = [
            Actor(i, config.env, agent_config, self.vocabulary, seed=config.seed)
            for i in range(config.trainer.n_actors)
        ]
        self.learner = Learner(self.agent, config.trainer)
        self.frames = 0
        self.episodes = 0
        self.max_level: int | None = None
        self.last_success_rate: float | None = None
        self.latest_checkpoint: Path | None = None
        self._sync(self.actors)

    @property
    def updates(self) -> int:
        return self.learner.version

    def _sync(self, actors: list[Actor]) -> None:
        parameters = self.agent.state_dict()
        for actor in actors:
            actor.sync(parameters, self.learner.version)

    def _actors_to_refresh(self) -> list[Actor]:
        if not self.config.trainer.stale_actors:
            return self.actors
        group = self.updates % 2
        return [a for a in self.actors if a.index % 2 == group]

    def collect(self, executor: ThreadPoolExecutor) -> list[Trajectory]:
        cfg = self.config.trainer
        return list(
            executor.map(lambda actor: actor.unroll(cfg.unroll_length, cfg.episode_aligned), self.actors)
        )

    def _track(self, episodes: list[EpisodeSummary]) -> None:
        self.episodes += len(episodes)
        levels = [e.level for e in episodes if e.level is not None]
        if levels:
            self.max_level = max(levels + ([self.max_level] if self.max_level is not None else []))
        if episodes:
            self.last_success_rate = sum(e.success for e in episodes) / len(episodes)

    def save_checkpoint(self) -> Path | None:
        if self.run_dir is None:
            return None
        path = save_checkpoint(self.run_dir.checkpoint_path(self.updates), self.agent.parameter_dict())
        self.latest_checkpoint = path
        logger.info(f"Checkpoint written to {path}.")
        return path

    def run(self) -> Iterator[UpdateMetrics]:
        """Trains until the frame budget is used up, yielding the metrics of every update."""
        cfg = self.config.trainer
        writer = MetricsWriter(self.run_dir.metrics_path) if self.run_dir is not None else None
        logger.info(
            f"Training {self.agent.num_parameters()} parameters on {self.config.env.name} "
            f"with {cfg.n_actors} actors for {cfg.total_frames} frames."
        )
        with ThreadPoolExecutor(max_workers=cfg.n_actors, thread_name_prefix="actor") as executor:
            while self.frames < cfg.total_frames:
                trajectories = self.collect(executor)
                stats = self.learner.update(trajectories)
                self.frames += stats.frames
                episodes = [e for t in trajectories for e in t.episodes]
                self._track(episodes)
                metrics = UpdateMetrics.from_update(self.updates, self.frames, episodes, self.max_level, stats)
                if writer is not None:
                    writer.write(metrics)
                if self.updates % cfg.checkpoint_every == 0:
                    self.save_checkpoint()
                self._sync(self._actors_to_refresh())
                yield metrics
        if self.run_dir is not None and self.latest_checkpoint != self.run_dir.checkpoint_path(self.updates):
            self.save_checkpoint()
        self.finish()

    def finish(self) -> RunSummary:
        summary = RunSummary(
            updates=self.updates,
            frames=self.frames,
            episodes=self.episodes,
            success_rate=self.last_success_rate,
            max_level=self.max_level,
            parameters=self.agent.num_parameters(),
            latest_checkpoint=(
                self.latest_checkpoint.relative_to(self.run_dir.path).as_posix()
                if self.run_dir is not None and self.latest_checkpoint is not None
                else None
            ),
        )
        if self.run_dir is not None:
            self.run_dir.write_summary(summary)
            self.run_dir.write_manifest()
            logger.info(f"Run finished after {self.updates} updates and {self.frames} frames.")
        return summary


def train(config: RunConfig, run_dir: RunDirectory | None = None) -> list[UpdateMetrics]:
    """Runs a whole training run and returns every update's metrics."""
    return list(Trainer(config, run_dir).run())
