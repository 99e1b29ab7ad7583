import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from farmrl.enums import EventTag
from farmrl.envs import AbstractMDPEnv, EnvConfig, make_env
from farmrl.envs.abstract_mdp import ScheduledEpisode
from farmrl.farm import FarmAgent
from farmrl.nets import Vocabulary
from farmrl.trainer.actor import select_action
from farmrl.trainer.evaluate import eval_seed

logger = logging.getLogger(__name__)


class EpisodeTrace(BaseModel):
    """
    Everything recorded about one analysis episode. Row t of every array belongs to the step on which action t was
    chosen; event_tags[t] are the events that action caused.

    Attributes
    ----------
    episode_id : int
    seed : int
    mdp_id : int | None
    level : int | None
    actions : list[int]
    rewards : list[float]
    event_tags : list[list[EventTag]]
    success : bool
    module_norms : np.ndarray | None
        T×n L2 norms of the module hidden states.
    coefficients : np.ndarray | None
        T×n×p feature-attention coefficients.
    module_sums : np.ndarray | None
        T×n sums of the module hidden states.
    frames : list[np.ndarray]
        Observations, kept only when asked for.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    episode_id: int
    seed: int
    mdp_id: int | None = None
    level: int | None = None
    actions: list[int]
    rewards: list[float]
    event_tags: list[list[EventTag]]
    success: bool
    module_norms: np.ndarray | None = None
    coefficients: np.ndarray | None = None
    module_sums: np.ndarray | None = None
    frames: list[np.ndarray] = Field(default_factory=list)

    @property
    def length(self) -> int:
        return len(self.actions)

    @property
    def coefficient_norms(self) -> np.ndarray | None:
        if self.coefficients is None:
            return None
        return np.linalg.norm(self.coefficients, axis=2)


def _run_episode(
    agent: FarmAgent,
    env_config: EnvConfig,
    vocabulary: Vocabulary,
    episode_id: int,
    seed: int,
    mdp_id: int | None,
    greedy: bool,
    record: bool,
    keep_frames: bool,
) -> EpisodeTrace:
    env = make_env(env_config.model_copy(update={"render": True}))
    if mdp_id is not None:
        if not isinstance(env, AbstractMDPEnv):
            raise ValueError(f"mdp_id schedules need an AbstractMDP env, got {env_config.name}.")
        result = env.reset(seed, mdp_id=mdp_id)
    else:
        result = env.reset(seed)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 11]))
    state = agent.initial_state()
    prev_action: int | None = None
    prev_reward = 0.0
    actions: list[int] = []
    rewards: list[float] = []
    tags: list[list[EventTag]] = []
    norms: list[np.ndarray] = []
    coefficients: list[np.ndarray] = []
    sums: list[np.ndarray] = []
    frames: list[np.ndarray] = []
    while not result.done:
        observation = result.observation
        if observation is None:
            raise RuntimeError(f"{env} returned no observation.")
        if keep_frames:
            frames.append(observation)
        output = agent.step(observation, vocabulary.encode(result.task_tokens), prev_action, prev_reward, state)
        state = output.state
        if record:
            norms.append(output.diagnostics.module_norms)
            coefficients.append(output.diagnostics.coefficients)
            sums.append(output.diagnostics.module_sums)
        prev_action = select_action(output.logits.data, rng, greedy)
        result = env.step(prev_action)
        prev_reward = result.reward
        actions.append(prev_action)
        rewards.append(result.reward)
        tags.append(list(result.info.event_tags))
    return EpisodeTrace(
        episode_id=episode_id,
        seed=seed,
        mdp_id=env.mdp_id if isinstance(env, AbstractMDPEnv) else None,
        level=getattr(env, "start_level", None),
        actions=actions,
        rewards=rewards,
        event_tags=tags,
        success=bool(result.info.success),
        module_norms=np.stack(norms) if record and norms else None,
        coefficients=np.stack(coefficients) if record and coefficients else None,
        module_sums=np.stack(sums) if record and sums else None,
        frames=frames,
    )


def collect_traces(
    agent: FarmAgent,
    env_config: EnvConfig,
    vocabulary: Vocabulary,
    n_episodes: int,
    seed: int = 0,
    greedy: bool = False,
    record: bool = True,
    keep_frames: bool = False,
    schedule: Sequence[ScheduledEpisode] | None = None,
    workers: int = 1,
) -> list[EpisodeTrace]:
    """Runs the frozen agent and records module traces, actions, rewards and event tags of every step.

    Recording only copies diagnostics the agent computes anyway, so the action stream is the same with record on or
    off. Episodes run in parallel threads when workers > 1; each owns its environment and sampler, so results do not
    depend on the number of workers.

    Parameters
    ----------
    agent : FarmAgent
        Frozen agent. Its parameters are only read.
    env_config : EnvConfig
    vocabulary : Vocabulary
    n_episodes : int
        Ignored when a schedule is given.
    seed : int
        Base seed of the episode seeds.
    greedy : bool
    record : bool
        Record module norms, coefficients and sums.
    keep_frames : bool
        Keep every observation in the trace.
    schedule : Sequence[ScheduledEpisode] | None
        Explicit (mdp_id, seed) per episode, for AbstractMDP runs.
    workers : int
        Parallel episode threads.
    """
    if schedule is not None:
        jobs = [(episode.index, episode.seed, episode.mdp_id) for episode in schedule]
    else:
        if n_episodes < 0:
            raise ValueError(f"n_episodes must be >= 0, got {n_episodes}.")
        jobs = [(k, eval_seed(seed, k), None) for k in range(n_episodes)]

    def run(job: tuple[int, int, int | None]) -> EpisodeTrace:
        episode_id, episode_seed, mdp_id = job
        return _run_episode(agent, env_config, vocabulary, episode_id, episode_seed, mdp_id, greedy, record, keep_frames)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="trace") as executor:
            traces = list(executor.map(run, jobs))
    else:
        traces = [run(job) for job in jobs]
    logger.info(f"Collected {len(traces)} traces on {env_config.name}.")
    return traces
