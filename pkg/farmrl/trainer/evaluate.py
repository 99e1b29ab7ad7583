import logging
import math
from typing import Protocol

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from farmrl.envs import BaseGridEnv, EnvConfig, make_env
from farmrl.farm import FarmAgent
from farmrl.nets import Vocabulary
from farmrl.trainer.actor import select_action

logger = logging.getLogger(__name__)


class EnvPolicy(Protocol):
    def begin_episode(self, env: BaseGridEnv) -> None: ...

    def act(self, env: BaseGridEnv) -> int: ...


class EpisodeOutcome(BaseModel):
    episode: int
    seed: int
    episode_return: float
    length: int
    success: bool
    level: int | None = None


class LevelBreakdown(BaseModel):
    level: int
    episodes: int
    success_rate: float
    stderr: float


class EvalReport(BaseModel):
    """
    Success-rate report of an evaluation.

    Attributes
    ----------
    env : str
    episodes : int
    mean_success : float | None
        None when no episodes were run.
    stderr : float | None
        Standard error of the mean success.
    mean_return : float | None
    per_level : list[LevelBreakdown]
        KeyBox only: success grouped by the level the episode started on.
    outcomes : list[EpisodeOutcome]
    """

    env: str
    episodes: int
    mean_success: float | None = None
    stderr: float | None = None
    mean_return: float | None = None
    per_level: list[LevelBreakdown] = Field(default_factory=list)
    outcomes: list[EpisodeOutcome] = Field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([o.model_dump() for o in self.outcomes])


def eval_seed(seed: int, episode: int) -> int:
    return int(np.random.SeedSequence([seed, 1_000_003, episode]).generate_state(1)[0])


def standard_error(values: list[float]) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


def build_report(env_config: EnvConfig, outcomes: list[EpisodeOutcome]) -> EvalReport:
    if not outcomes:
        return EvalReport(env=str(env_config.name), episodes=0)
    successes = [float(o.success) for o in outcomes]
    per_level = []
    levels = sorted({o.level for o in outcomes if o.level is not None})
    for level in levels:
        group = [float(o.success) for o in outcomes if o.level == level]
        per_level.append(
            LevelBreakdown(
                level=level,
                episodes=len(group),
                success_rate=float(np.mean(group)),
                stderr=standard_error(group),
            )
        )
    return EvalReport(
        env=str(env_config.name),
        episodes=len(outcomes),
        mean_success=float(np.mean(successes)),
        stderr=standard_error(successes),
        mean_return=float(np.mean([o.episode_return for o in outcomes])),
        per_level=per_level,
        outcomes=outcomes,
    )


def _start_level(env: BaseGridEnv) -> int | None:
    return getattr(env, "start_level", None)


def evaluate(
    agent: FarmAgent,
    env_config: EnvConfig,
    vocabulary: Vocabulary,
    n_episodes: int,
    seed: int = 0,
    greedy: bool = False,
) -> EvalReport:
    """Runs the frozen agent for n_episodes, greedy or sampled, and reports its success rate.

    Parameters
    ----------
    agent : FarmAgent
    env_config : EnvConfig
    vocabulary : Vocabulary
    n_episodes : int
        0 gives an empty report.
    seed : int
        Base seed of the episode seeds and of the action sampler.
    greedy : bool
    """
    if n_episodes < 0:
        raise ValueError(f"n_episodes must be >= 0, got {n_episodes}.")
    env = make_env(env_config.model_copy(update={"render": True}))
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    outcomes = []
    for episode in range(n_episodes):
        episode_seed = eval_seed(seed, episode)
        result = env.reset(episode_seed)
        level = _start_level(env)
        state = agent.initial_state()
        prev_action: int | None = None
        prev_reward = 0.0
        total = 0.0
        while not result.done:
            assert result.observation is not None
            output = agent.step(
                result.observation, vocabulary.encode(result.task_tokens), prev_action, prev_reward, state
            )
            state = output.state
            prev_action = select_action(output.logits.data, rng, greedy)
            result = env.step(prev_action)
            prev_reward = result.reward
            total += result.reward
        outcomes.append(
            EpisodeOutcome(
                episode=episode,
                seed=episode_seed,
                episode_return=total,
                length=env.t,
                success=bool(result.info.success),
                level=level,
            )
        )
    report = build_report(env_config, outcomes)
    logger.info(f"Evaluated {report.episodes} episodes on {env_config.name}: success {report.mean_success}.")
    return report


def evaluate_policy(policy: EnvPolicy, env_config: EnvConfig, n_episodes: int, seed: int = 0) -> EvalReport:
    """Evaluates a reference policy that reads the environment directly. Frames are not rendered."""
    if n_episodes < 0:
        raise ValueError(f"n_episodes must be >= 0, got {n_episodes}.")
    env = make_env(env_config.model_copy(update={"render": False}))
    outcomes = []
    for episode in range(n_episodes):
        episode_seed = eval_seed(seed, episode)
        result = env.reset(episode_seed)
        level = _start_level(env)
        policy.begin_episode(env)
        total = 0.0
        while not result.done:
            result = env.step(policy.act(env))
            total += result.reward
        outcomes.append(
            EpisodeOutcome(
                episode=episode,
                seed=episode_seed,
                episode_return=total,
                length=env.t,
                success=bool(result.info.success),
                level=level,
            )
        )
    return build_report(env_config, outcomes)
