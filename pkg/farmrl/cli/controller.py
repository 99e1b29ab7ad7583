import json
import logging
from pathlib import Path
from typing import Any

from rich import print
from rich.table import Table

from farmrl.analysis import BundleIndex, run_analysis
from farmrl.enums import EnvName
from farmrl.envs import ChanceBalletPolicy, EnvConfig, RandomPolicy, make_env
from farmrl.farm import FarmAgent
from farmrl.run_config import ConfigError, RunConfig, load_run_config, preset_config
from farmrl.tensor import load_checkpoint, set_default_dtype, verify_checkpoint
from farmrl.trainer import EvalReport, RunDirectory, Trainer, evaluate, evaluate_policy, resolve_checkpoint
from farmrl.trainer.train import checked_vocabulary

logger = logging.getLogger(__name__)

DEFAULT_PRESETS: dict[EnvName, str] = {
    EnvName.BALLET: "ballet",
    EnvName.KEYBOX: "keybox_dense",
    EnvName.PUTNEXT: "putnext",
    EnvName.ABSTRACT_MDP: "abstract_mdp",
}
PROGRESS_EVERY = 10


def resolve_run_config(
    config_path: Path | None,
    preset: str | None,
    env: EnvName | None = None,
    seed: int | None = None,
    out: Path | None = None,
    env_overrides: dict[str, Any] | None = None,
) -> tuple[RunConfig, str | None]:
    """Builds the run config from a TOML file or a preset, then applies command-line overrides.

    Without a file or preset, the preset matching --env is used (keybox_dense when no env is given either).

    Returns
    -------
    tuple[RunConfig, str | None]
        The config and the text of the config file it came from, if any.
    """
    if config_path is not None and preset is not None:
        raise ConfigError("Pass either --config or --preset, not both.")
    source_text = None
    if config_path is not None:
        config = load_run_config(config_path)
        source_text = config_path.read_text()
    else:
        config = preset_config(preset or DEFAULT_PRESETS[env or EnvName.KEYBOX])
    changes: dict[str, Any] = {}
    env_changes = {k: v for k, v in (env_overrides or {}).items() if v is not None}
    if env is not None:
        env_changes["name"] = env
    if env_changes:
        changes["env"] = env_changes
    if seed is not None:
        changes["seed"] = seed
    if out is not None:
        changes["out"] = out
    if changes:
        config = config.with_changes(**changes)
    return config, source_text


def train_run(config: RunConfig, source_text: str | None = None) -> RunDirectory:
    """Runs training into config.out and returns the run directory."""
    run_dir = RunDirectory(config.out)
    run_dir.create(config, source_text)
    trainer = Trainer(config, run_dir)
    print(
        f"[bold]Training {trainer.agent.num_parameters():,} parameters on {config.env.name} "
        f"for {config.trainer.total_frames:,} frames.[/bold]"
    )
    for metrics in trainer.run():
        if metrics.update % PROGRESS_EVERY == 0:
            print(
                f"[dim]update {metrics.update} | frames {metrics.frames:,} | return {metrics.episode_return:.3f} | "
                f"success {metrics.success_rate:.2f} | level {metrics.max_level} | loss {metrics.total_loss:.4f}"
            )
    print(f"[bold green]Run complete. Artifacts written to {run_dir.path}")
    return run_dir


def load_trained_agent(config: RunConfig, checkpoint: str | Path) -> FarmAgent:
    set_default_dtype(config.trainer.precision)
    path = resolve_checkpoint(checkpoint)
    agent = FarmAgent(config.agent_config, seed=config.seed)
    manifest = verify_checkpoint(path)
    agent.load_parameters(load_checkpoint(path, verify=False))
    print(f"[dim]Loaded checkpoint {path} ({len(manifest.entries)} tensors, sha256 {manifest.container_sha256[:12]})")
    return agent


def print_report(report: EvalReport) -> None:
    if report.episodes == 0:
        print(f"[bold yellow]No episodes evaluated on {report.env}.")
        return
    print(
        f"[bold green]{report.env}: success {report.mean_success:.3f} ± {report.stderr:.3f} "
        f"over {report.episodes} episodes (mean return {report.mean_return:.3f})"
    )
    if report.per_level:
        table = Table("level", "episodes", "success", "stderr", title="Success per level")
        for row in report.per_level:
            table.add_row(str(row.level), str(row.episodes), f"{row.success_rate:.3f}", f"{row.stderr:.3f}")
        print(table)


def eval_run(
    config: RunConfig,
    checkpoint: str | Path | None,
    episodes: int,
    greedy: bool = False,
    policy: str | None = None,
    out: Path | None = None,
) -> EvalReport:
    """Evaluates a checkpoint, or a reference policy ("random", or "chance" for Ballet) when no checkpoint is given."""
    if checkpoint is not None:
        agent = load_trained_agent(config, checkpoint)
        vocabulary = checked_vocabulary(config.agent_config.language.vocab_size)
        report = evaluate(agent, config.env, vocabulary, episodes, seed=config.seed, greedy=greedy)
    elif policy == "chance":
        report = evaluate_policy(ChanceBalletPolicy(config.seed), config.env, episodes, seed=config.seed)
    elif policy == "random":
        report = evaluate_policy(RandomPolicy(config.seed), config.env, episodes, seed=config.seed)
    else:
        raise ConfigError("eval needs --checkpoint, or --policy random|chance.")
    print_report(report)
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(report.model_dump_json(indent=2) + "\n")
        print(f"[dim]Report written to {out}")
    return report


def analyze_run(
    config: RunConfig, checkpoint: str | Path | None, out: Path, random_weights: bool = False
) -> BundleIndex:
    if checkpoint is None and not random_weights:
        raise ConfigError("analyze needs --checkpoint or --random-weights.")
    set_default_dtype(config.trainer.precision)
    path = None if random_weights or checkpoint is None else resolve_checkpoint(checkpoint)
    vocabulary = checked_vocabulary(config.agent_config.language.vocab_size)
    index = run_analysis(config.agent_config, config.env, config.analysis, vocabulary, out, checkpoint=path)
    print(f"[bold green]Analysis bundle ({index.label} weights) written to {out}")
    for entry in index.files:
        print(f"[dim]  {entry.path}: {entry.description}")
    empty = {name: events for name, events in index.empty_events.items() if events}
    if empty:
        print(f"[yellow]Events without segments: {json.dumps(empty)}")
    return index


def env_debug(env_config: EnvConfig, seed: int, actions: list[int]) -> list[str]:
    """Prints the ASCII state after reset and after each action. Returns the printed renders."""
    env = make_env(env_config.model_copy(update={"render": False}))
    result = env.reset(seed)
    renders = [env.render_text()]
    print(f"[bold]{env_config.name} seed={seed} tokens={' '.join(result.task_tokens) or '-'}")
    print(renders[-1])
    for action in actions:
        if result.done:
            print("[yellow]Episode over; remaining actions ignored.")
            break
        result = env.step(action)
        renders.append(env.render_text())
        tags = ", ".join(str(t) for t in result.info.event_tags) or "-"
        print(
            f"[dim]action {action} -> reward {result.reward} done {result.done} "
            f"t {result.info.t} level {result.info.level} events {tags}"
        )
        print(renders[-1])
    return renders
