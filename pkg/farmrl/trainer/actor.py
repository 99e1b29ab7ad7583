import logging
from collections.abc import Mapping

import numpy as np

from farmrl.envs import EnvConfig, StepResult, make_env
from farmrl.farm import AgentConfig, FarmAgent, FarmState
from farmrl.nets import Vocabulary
from farmrl.trainer.trajectory import EpisodeSummary, StepInput, Trajectory

logger = logging.getLogger(__name__)


def episode_seed(seed: int, actor: int, episode: int) -> int:
    """Environment seed of an actor's n-th episode, independent of how episodes fall into unrolls."""
    return int(np.random.SeedSequence([seed, actor, episode]).generate_state(1)[0])


def select_action(logits: np.ndarray, rng: np.random.Generator, greedy: bool = False) -> int:
    """Samples from softmax(logits), or takes the argmax (lowest index on ties) when greedy."""
    if greedy:
        return int(np.argmax(logits))
    shifted = np.asarray(logits, dtype=np.float64) - np.max(logits)
    probs = np.exp(shifted)
    probs /= probs.sum()
    return int(rng.choice(len(probs), p=probs))


class Actor:
    """Owns one environment and a private copy of the agent's parameters, and produces unrolls.

    Actors never record on a tape. Their parameters change only through sync, which the trainer calls between learner
    updates.

    Parameters
    ----------
    index : int
        Actor id, part of every seed the actor derives.
    env_config : EnvConfig
    agent_config : AgentConfig
    vocabulary : Vocabulary
        Maps instruction tokens to embedding ids.
    seed : int
        Run seed.
    """

    def __init__(
        self,
        index: int,
        env_config: EnvConfig,
        agent_config: AgentConfig,
        vocabulary: Vocabulary,
        seed: int = 0,
    ) -> None:
        self.index = index
        self.seed = seed
        self.env = make_env(env_config.model_copy(update={"render": True}))
        self.agent = FarmAgent(agent_config, seed=seed)
        self.vocabulary = vocabulary
        self.rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
        self.parameter_version = 0
        self.episodes_started = 0
        self.current: StepInput | None = None
        self.state: FarmState | None = None
        self.episode_return = 0.0
        self.episode_length = 0

    def sync(self, parameters: Mapping[str, np.ndarray], version: int) -> None:
        self.agent.load_parameters(parameters)
        self.parameter_version = version

    def _to_input(
        self, result: StepResult, prev_action: int | None, episode_start: bool
    ) -> StepInput:
        if result.observation is None:
            raise RuntimeError(f"{self.env} returned no observation; actors need rendered frames.")
        return StepInput(
            observation=result.observation,
            task_ids=self.vocabulary.encode(result.task_tokens),
            prev_action=prev_action,
            prev_reward=result.reward,
            episode_start=episode_start,
        )

    def _begin_episode(self) -> StepInput:
        result = self.env.reset(episode_seed(self.seed, self.index, self.episodes_started))
        self.episodes_started += 1
        self.episode_return = 0.0
        self.episode_length = 0
        return self._to_input(result.model_copy(update={"reward": 0.0}), None, episode_start=True)

    def unroll(self, length: int, episode_aligned: bool = False) -> Trajectory:
        """Acts for up to `length` steps, carrying the environment and recurrent state over from the previous unroll.

        Parameters
        ----------
        length : int
            Steps to take.
        episode_aligned : bool
            Stop right after an episode ends instead of continuing into the next one.

        Raises
        ------
        RuntimeError
            Wrapping any environment failure with the actor and episode it happened in.
        """
        if self.current is None:
            self.current = self._begin_episode()
            self.state = self.agent.initial_state()
        if self.current.episode_start or self.state is None:
            self.state = self.agent.initial_state()
        snapshot = self.state.snapshot()
        inputs: list[StepInput] = [self.current]
        actions: list[int] = []
        rewards: list[float] = []
        dones: list[bool] = []
        logits: list[np.ndarray] = []
        values: list[float] = []
        episodes: list[EpisodeSummary] = []
        state = self.state
        for _ in range(length):
            step_input = inputs[-1]
            if step_input.episode_start:
                state = self.agent.initial_state()
            output = self.agent.step(
                step_input.observation,
                step_input.task_ids,
                step_input.prev_action,
                step_input.prev_reward,
                state,
            )
            state = output.state
            action = select_action(output.logits.data, self.rng)
            try:
                result = self.env.step(action)
            except Exception as e:
                raise RuntimeError(
                    f"Actor {self.index} failed in episode {self.episodes_started - 1} at t={self.env.t}: {e}"
                ) from e
            actions.append(action)
            rewards.append(result.reward)
            dones.append(result.done)
            logits.append(output.logits.numpy())
            values.append(output.value.item())
            self.episode_return += result.reward
            self.episode_length += 1
            if result.done:
                episodes.append(
                    EpisodeSummary(
                        actor=self.index,
                        episode_return=self.episode_return,
                        length=self.episode_length,
                        success=bool(result.info.success),
                        level=result.info.level,
                    )
                )
                inputs.append(self._begin_episode())
                if episode_aligned:
                    break
            else:
                inputs.append(self._to_input(result, action, episode_start=False))
        self.current = inputs[-1]
        self.state = state
        return Trajectory(
            actor=self.index,
            initial_state=snapshot,
            inputs=inputs,
            actions=actions,
            rewards=rewards,
            dones=dones,
            behavior_logits=np.stack(logits),
            behavior_values=np.asarray(values),
            parameter_version=self.parameter_version,
            episodes=episodes,
        )
