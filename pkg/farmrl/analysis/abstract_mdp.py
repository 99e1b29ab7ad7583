import logging
from collections.abc import Sequence

import pandas as pd
from pydantic import BaseModel

from farmrl.analysis.errors import ModelConfigError
from farmrl.analysis.traces import EpisodeTrace, collect_traces
from farmrl.enums import EnvName
from farmrl.envs import AbstractMDPSampler, EnvConfig
from farmrl.farm import AgentConfig, FarmAgent
from farmrl.nets import Vocabulary

logger = logging.getLogger(__name__)

REQUIRED_MODULES = 4
REQUIRED_D_H = 20
MODULE_SUM_COLUMNS = ["mdp_id", "episode", "t", "module", "value"]


class VarianceRatio(BaseModel):
    """
    How strongly per-episode module activity separates the placements.

    Attributes
    ----------
    across : float
        Variance across mdp_ids of the per-id mean activity, averaged over modules.
    within : float
        Variance across episodes of the same mdp_id, averaged over ids and modules.
    ratio : float | None
        across / within, None when within is 0.
    """

    across: float
    within: float
    ratio: float | None


def check_abstract_mdp_model(config: AgentConfig) -> None:
    farm = config.farm
    if farm.n_modules != REQUIRED_MODULES or farm.d_h != REQUIRED_D_H:
        raise ModelConfigError(
            f"The module-sum analysis needs {REQUIRED_MODULES} modules of {REQUIRED_D_H} units, "
            f"got {farm.n_modules} modules of {farm.d_h}."
        )


def module_sums_frame(traces: Sequence[EpisodeTrace]) -> pd.DataFrame:
    """Long table (mdp_id, episode, t, module, value) of Σ_d h_t^(i) per step."""
    rows = []
    for trace in traces:
        if trace.module_sums is None:
            raise ValueError(f"Episode {trace.episode_id} was collected without recording module traces.")
        for t, sums in enumerate(trace.module_sums):
            for module, value in enumerate(sums):
                rows.append(
                    {
                        "mdp_id": trace.mdp_id,
                        "episode": trace.episode_id,
                        "t": t,
                        "module": module + 1,
                        "value": float(value),
                    }
                )
    return pd.DataFrame(rows, columns=MODULE_SUM_COLUMNS)


def variance_ratio(frame: pd.DataFrame) -> VarianceRatio:
    """Across-id over within-id variance of each episode's time-averaged module sums."""
    if frame.empty:
        return VarianceRatio(across=0.0, within=0.0, ratio=None)
    per_episode = frame.groupby(["mdp_id", "episode", "module"])["value"].mean().reset_index()
    within = per_episode.groupby(["mdp_id", "module"])["value"].var(ddof=0).groupby(level="module").mean()
    id_means = per_episode.groupby(["mdp_id", "module"])["value"].mean()
    across = id_means.groupby(level="module").var(ddof=0)
    within_value = float(within.mean())
    across_value = float(across.mean())
    return VarianceRatio(
        across=across_value,
        within=within_value,
        ratio=across_value / within_value if within_value > 0 else None,
    )


def abstractmdp_module_sums(
    agent: FarmAgent,
    vocabulary: Vocabulary,
    n_episodes: int = 1000,
    seed: int = 0,
    master_seed: int = 0,
    greedy: bool = False,
    workers: int = 1,
) -> tuple[pd.DataFrame, VarianceRatio]:
    """Runs a round-robin schedule over the placements and returns module-sum series grouped by mdp_id.

    Raises
    ------
    ModelConfigError
        If the agent is not the 4-module, 20-unit configuration.
    """
    check_abstract_mdp_model(agent.config)
    env_config = EnvConfig(name=EnvName.ABSTRACT_MDP, master_seed=master_seed)
    traces = collect_traces(
        agent,
        env_config,
        vocabulary,
        n_episodes,
        seed=seed,
        greedy=greedy,
        schedule=list(AbstractMDPSampler(n_episodes, seed)),
        workers=workers,
    )
    frame = module_sums_frame(traces)
    ratio = variance_ratio(frame)
    logger.info(f"AbstractMDP module sums over {len(traces)} episodes: across/within ratio {ratio.ratio}.")
    return frame, ratio


def mean_series(frame: pd.DataFrame) -> pd.DataFrame:
    """Per (mdp_id, module, t): the mean module sum over the id's episodes and how many episodes reached t."""
    columns = ["mdp_id", "module", "t", "mean", "count"]
    if frame.empty:
        return pd.DataFrame(columns=columns)
    grouped = frame.groupby(["mdp_id", "module", "t"])["value"].agg(["mean", "count"]).reset_index()
    return grouped[columns]
