"""End-to-end representation analysis of one agent, written out as a plot bundle.

Bundle files (paths are stable):

    norm_curves.csv               event, module, window_index, mean, stderr, count
    coefficient_curves.csv        same columns, for feature-attention coefficient norms
    reference_curve.csv           same columns, event "episode", aligned at episode start
    event_contrast.csv            module, events, between_variance, within_variance, ratio
    correlations.csv              event, module_i, module_j, corr, segments
    norm_curves_random.csv        control tables computed with random weights (trained runs only)
    event_contrast_random.csv
    correlations_random.csv
    correlation_comparison.csv    event, module_i, module_j, trained, random
    abstract_mdp_module_sums.csv  mdp_id, episode, t, module, value (AbstractMDP only)
    abstract_mdp_mean_sums.csv    mdp_id, module, t, mean, count (AbstractMDP only)
    abstract_mdp_variance.json    across, within, ratio (AbstractMDP only)
    episodes.jsonl                episode log of the analysed episodes
    frames/                       observations, when record_frames is set
    index.json
"""

import logging
from pathlib import Path

import pandas as pd

from farmrl.analysis.abstract_mdp import abstractmdp_module_sums, mean_series
from farmrl.analysis.bundle import BundleIndex, PlotBundle
from farmrl.analysis.config import AnalysisConfig
from farmrl.analysis.correlation import compare_correlations, correlations_frame, pairwise_event_correlation
from farmrl.analysis.norms import EventCurves, event_average_curves, event_contrast
from farmrl.analysis.segments import extract_segments
from farmrl.analysis.traces import EpisodeTrace, collect_traces
from farmrl.enums import EnvName
from farmrl.envs import EnvConfig, EpisodeLogger, EpisodeRecord
from farmrl.farm import AgentConfig, FarmAgent
from farmrl.nets import Vocabulary
from farmrl.tensor import load_checkpoint

logger = logging.getLogger(__name__)


class EventAnalysis:
    """Traces, event curves, correlations and the contrast statistic of one agent."""

    def __init__(
        self,
        traces: list[EpisodeTrace],
        norms: EventCurves,
        coefficients: EventCurves,
        correlations: pd.DataFrame,
        contrast: pd.DataFrame,
    ) -> None:
        self.traces = traces
        self.norms = norms
        self.coefficients = coefficients
        self.correlations = correlations
        self.contrast = contrast


def load_agent(agent_config: AgentConfig, checkpoint: Path | None, seed: int = 0) -> FarmAgent:
    """An agent with the checkpoint's parameters, or freshly initialized from `seed` when there is no checkpoint."""
    agent = FarmAgent(agent_config, seed=seed)
    if checkpoint is not None:
        agent.load_parameters(load_checkpoint(checkpoint))
        logger.info(f"Loaded {checkpoint} into a {agent_config.farm.n_modules}-module agent.")
    return agent


def analysis_env(env_config: EnvConfig, config: AnalysisConfig) -> EnvConfig:
    """KeyBox analysis episodes play exactly one level, the configured one."""
    if env_config.name == EnvName.KEYBOX:
        return env_config.model_copy(update={"level": config.level, "max_level": config.level})
    return env_config


def analyze_events(
    agent: FarmAgent, env_config: EnvConfig, vocabulary: Vocabulary, config: AnalysisConfig
) -> EventAnalysis:
    traces = collect_traces(
        agent,
        analysis_env(env_config, config),
        vocabulary,
        config.episodes,
        seed=config.seed,
        greedy=config.greedy,
        keep_frames=config.record_frames,
        workers=config.workers,
    )
    segments = extract_segments(traces, k=config.window)
    norms = event_average_curves(traces, segments, "norm")
    return EventAnalysis(
        traces=traces,
        norms=norms,
        coefficients=event_average_curves(traces, segments, "coefficient"),
        correlations=correlations_frame(pairwise_event_correlation(traces, segments), segments),
        contrast=event_contrast(norms.curves),
    )


def write_episode_log(bundle: PlotBundle, traces: list[EpisodeTrace], record_frames: bool) -> None:
    frames_dir = bundle.out_dir / "frames" if record_frames else None
    with EpisodeLogger(bundle.out_dir / "episodes.jsonl", frames_dir=frames_dir) as log:
        for trace in traces:
            for t, action in enumerate(trace.actions):
                record = EpisodeRecord(
                    episode_id=trace.episode_id,
                    t=t + 1,
                    level=trace.level,
                    action=action,
                    reward=trace.rewards[t],
                    done=t == trace.length - 1,
                    event_tags=trace.event_tags[t],
                )
                log.write(record, trace.frames[t] if trace.frames else None)
    bundle.add_file("episodes.jsonl", "Episode log: one record per step of every analysed episode.")
    if frames_dir is not None:
        bundle.add_file("frames/", "Observation before each step, <episode_id>_<t>.npy, H×W×3 uint8.")


def run_analysis(
    agent_config: AgentConfig,
    env_config: EnvConfig,
    config: AnalysisConfig,
    vocabulary: Vocabulary,
    out_dir: Path,
    checkpoint: Path | None = None,
) -> BundleIndex:
    """Analyses the checkpoint (or random weights when there is none) and writes the plot bundle.

    For a checkpoint, a random-weights control agent of the same configuration is analysed on the same episodes
    seeds and written next to it, together with a side-by-side correlation table.
    """
    random_weights = checkpoint is None
    agent = load_agent(agent_config, checkpoint, seed=config.random_seed)
    bundle = PlotBundle(out_dir, label="random" if random_weights else "trained")

    if env_config.name == EnvName.ABSTRACT_MDP:
        frame, ratio = abstractmdp_module_sums(
            agent,
            vocabulary,
            config.abstract_mdp_episodes,
            seed=config.seed,
            master_seed=env_config.master_seed,
            greedy=config.greedy,
            workers=config.workers,
        )
        bundle.add_table("abstract_mdp_module_sums.csv", frame, "Σ_d h_t per module, step and episode.")
        bundle.add_table("abstract_mdp_mean_sums.csv", mean_series(frame), "Module sums averaged per mdp_id.")
        bundle.add_json("abstract_mdp_variance.json", ratio.model_dump(), "Across-id vs within-id variance.")
        bundle.index.statistics["abstract_mdp_variance_ratio"] = ratio.ratio
        index_path = bundle.write_index()
        logger.info(f"Analysis bundle written to {index_path.parent}.")
        return bundle.index

    primary = analyze_events(agent, env_config, vocabulary, config)
    bundle.add_table("norm_curves.csv", primary.norms.curves, "Event-aligned module norm curves.")
    bundle.add_table(
        "coefficient_curves.csv", primary.coefficients.curves, "Event-aligned feature-attention coefficient norms."
    )
    bundle.add_table("reference_curve.csv", primary.norms.reference, "Module norms over whole episodes.")
    bundle.add_table("event_contrast.csv", primary.contrast, "Between-event vs within-event variance per module.")
    bundle.add_table("correlations.csv", primary.correlations, "Pairwise module norm correlations per event.")
    bundle.index.empty_events["norm_curves.csv"] = [str(e) for e in primary.norms.empty_events]
    bundle.index.statistics["episodes"] = len(primary.traces)
    bundle.index.statistics["success_rate"] = (
        sum(t.success for t in primary.traces) / len(primary.traces) if primary.traces else None
    )
    write_episode_log(bundle, primary.traces, config.record_frames)

    if not random_weights:
        control_agent = load_agent(agent_config, None, seed=config.random_seed)
        control = analyze_events(control_agent, env_config, vocabulary, config.model_copy(update={"record_frames": False}))
        bundle.add_table("norm_curves_random.csv", control.norms.curves, "Norm curves of the random-weights control.")
        bundle.add_table("event_contrast_random.csv", control.contrast, "Event contrast of the random-weights control.")
        bundle.add_table("correlations_random.csv", control.correlations, "Correlations of the random-weights control.")
        bundle.add_table(
            "correlation_comparison.csv",
            compare_correlations(primary.correlations, control.correlations),
            "Trained and random-weight correlations side by side.",
        )
        bundle.index.empty_events["norm_curves_random.csv"] = [str(e) for e in control.norms.empty_events]
        bundle.index.statistics["between_event_variance_trained"] = _mean_between(primary.contrast)
        bundle.index.statistics["between_event_variance_random"] = _mean_between(control.contrast)

    index_path = bundle.write_index()
    logger.info(f"Analysis bundle written to {index_path.parent}.")
    return bundle.index


def _mean_between(contrast: pd.DataFrame) -> float | None:
    if contrast.empty:
        return None
    return float(contrast["between_variance"].mean())
