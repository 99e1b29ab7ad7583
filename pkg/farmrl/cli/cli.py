#!/usr/bin/env python
import functools
import logging
from collections.abc import Callable
from pathlib import Path
from typing import Any, TypeVar

import typer
from click import Context
from pydantic import ValidationError
from rich import print
from rich.logging import RichHandler
from typer.core import TyperGroup

from farmrl.analysis import ModelConfigError
from farmrl.cli.controller import analyze_run, env_debug, eval_run, resolve_run_config, train_run
from farmrl.cli.live_test_smoke_training import SMOKE_FRAME_BUDGET, smoke_training_run
from farmrl.enums import BalletVariant, EnvName, KeyBoxSetting
from farmrl.run_config import PRESET_NAMES, ConfigError, format_validation_error

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

F = TypeVar("F", bound=Callable[..., Any])


class OrderCommands(TyperGroup):
    def list_commands(self, ctx: Context) -> list[str]:
        """Return list of commands in the order the commands are defined."""
        return list(self.commands)


app = typer.Typer(
    name="farm",
    cls=OrderCommands,
    no_args_is_help=True,
    help="Train, evaluate and analyse FARM agents on the gridworld tasks. Every run is reproducible from its run directory.",
)


def exit_codes(command: F) -> F:
    """Maps failures to the CLI's exit codes: 1 for invalid configs or arguments, 2 for anything failing at runtime."""

    @functools.wraps(command)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return command(*args, **kwargs)
        except typer.Exit:
            raise
        except (ConfigError, ModelConfigError) as e:
            print(f"[bold red]Invalid configuration:[/bold red]\n{e}")
            raise typer.Exit(EXIT_VALIDATION)
        except ValidationError as e:
            print(f"[bold red]Invalid configuration:[/bold red]\n{format_validation_error(e)}")
            raise typer.Exit(EXIT_VALIDATION)
        except Exception as e:
            logging.getLogger(__name__).debug("Command failed.", exc_info=True)
            print(f"[bold red]{type(e).__name__}: {e}")
            raise typer.Exit(EXIT_RUNTIME)

    return wrapper  # type: ignore[return-value]


@app.callback()
def main(
    verbose: bool = typer.Option(False, "-v", "--verbose", help="Log at DEBUG instead of INFO."),
) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        handlers=[RichHandler(rich_tracebacks=True, show_path=verbose)],
        force=True,
    )


CONFIG_OPTION = typer.Option(None, "-c", "--config", help="TOML run config.")
PRESET_OPTION = typer.Option(None, "--preset", help=f"Built-in run config, one of {list(PRESET_NAMES)}.")
ENV_OPTION = typer.Option(None, "--env", help=f"Environment, one of {EnvName.choices()}.")
SEED_OPTION = typer.Option(None, "--seed", help="Run seed.")
DANCERS_OPTION = typer.Option(None, "--dancers", help="Ballet dancers: 2, 4 or 8.")
VARIANT_OPTION = typer.Option(None, "--variant", help=f"Ballet variant, one of {BalletVariant.choices()}.")
SETTING_OPTION = typer.Option(None, "--setting", help=f"KeyBox setting, one of {KeyBoxSetting.choices()}.")
LEVEL_OPTION = typer.Option(None, "--level", help="KeyBox level.")
DISTRACTORS_OPTION = typer.Option(None, "--distractors", help="PutNext distractors.")


def _env_overrides(
    dancers: int | None,
    variant: BalletVariant | None,
    setting: KeyBoxSetting | None,
    level: int | None,
    distractors: int | None,
) -> dict[str, Any]:
    overrides: dict[str, Any] = {
        "dancers": dancers,
        "variant": variant,
        "setting": setting,
        "level": level,
        "distractors": distractors,
    }
    if level is not None:
        overrides["max_level"] = max(level, 10)
    return overrides


@app.command(
    name="train",
    help="Trains an agent. Writes the config copy, metrics.csv, checkpoints/, summary.json and a checksum manifest to the run directory.",
)
@exit_codes
def train(
    config: Path | None = CONFIG_OPTION,
    preset: str | None = PRESET_OPTION,
    env: EnvName | None = ENV_OPTION,
    seed: int | None = SEED_OPTION,
    out: Path | None = typer.Option(None, "-o", "--out", help="Run directory. Defaults to the config's `out`."),
    dancers: int | None = DANCERS_OPTION,
    variant: BalletVariant | None = VARIANT_OPTION,
    setting: KeyBoxSetting | None = SETTING_OPTION,
    level: int | None = LEVEL_OPTION,
    distractors: int | None = DISTRACTORS_OPTION,
) -> None:
    run_config, source_text = resolve_run_config(
        config, preset, env, seed, out, _env_overrides(dancers, variant, setting, level, distractors)
    )
    train_run(run_config, source_text)


@app.command(
    name="eval",
    help="Reports the success rate of a checkpoint (or of a reference policy) over a number of episodes, per level for KeyBox.",
)
@exit_codes
def eval_(
    checkpoint: str | None = typer.Option(
        None, "--checkpoint", help="Checkpoint file, run directory, or '<run dir>:<update|latest>'."
    ),
    episodes: int = typer.Option(100, "-n", "--episodes", help="Episodes to evaluate. 0 gives an empty report."),
    greedy: bool = typer.Option(False, "--greedy", help="Take the most likely action instead of sampling."),
    policy: str | None = typer.Option(None, "--policy", help="Evaluate 'random' or 'chance' instead of a checkpoint."),
    config: Path | None = CONFIG_OPTION,
    preset: str | None = PRESET_OPTION,
    env: EnvName | None = ENV_OPTION,
    seed: int | None = SEED_OPTION,
    out: Path | None = typer.Option(None, "-o", "--out", help="Also write the report as JSON to this file."),
    dancers: int | None = DANCERS_OPTION,
    variant: BalletVariant | None = VARIANT_OPTION,
    setting: KeyBoxSetting | None = SETTING_OPTION,
    level: int | None = LEVEL_OPTION,
    distractors: int | None = DISTRACTORS_OPTION,
) -> None:
    run_config, _ = resolve_run_config(
        config, preset, env, seed, None, _env_overrides(dancers, variant, setting, level, distractors)
    )
    if episodes < 0:
        raise ConfigError(f"--episodes must be >= 0, got {episodes}.")
    eval_run(run_config, checkpoint, episodes, greedy=greedy, policy=policy, out=out)


@app.command(
    name="analyze",
    help="Runs the representation analysis of a checkpoint (or of random weights) and writes a plot bundle.",
)
@exit_codes
def analyze(
    checkpoint: str | None = typer.Option(
        None, "--checkpoint", help="Checkpoint file, run directory, or '<run dir>:<update|latest>'."
    ),
    random_weights: bool = typer.Option(
        False, "--random-weights", help="Analyse a freshly initialized agent of the same configuration."
    ),
    out: Path = typer.Option(Path("analysis"), "-o", "--out", help="Bundle directory."),
    episodes: int | None = typer.Option(None, "-n", "--episodes", help="Analysis episodes."),
    config: Path | None = CONFIG_OPTION,
    preset: str | None = PRESET_OPTION,
    env: EnvName | None = ENV_OPTION,
    seed: int | None = SEED_OPTION,
    level: int | None = LEVEL_OPTION,
) -> None:
    run_config, _ = resolve_run_config(config, preset, env, seed, None)
    analysis: dict[str, Any] = {}
    if episodes is not None:
        analysis["episodes"] = episodes
        analysis["abstract_mdp_episodes"] = episodes
    if level is not None:
        analysis["level"] = level
    if analysis:
        run_config = run_config.with_changes(analysis=analysis)
    analyze_run(run_config, checkpoint, out, random_weights=random_weights)


@app.command(
    name="env-debug",
    help="Prints an ASCII render of an environment after reset and after each given action.",
)
@exit_codes
def env_debug_(
    actions: list[int] = typer.Argument(None, help="Actions to apply in order."),
    env: EnvName = typer.Option(EnvName.KEYBOX, "--env", help=f"Environment, one of {EnvName.choices()}."),
    seed: int = typer.Option(0, "--seed", help="Episode seed."),
    dancers: int | None = DANCERS_OPTION,
    variant: BalletVariant | None = VARIANT_OPTION,
    setting: KeyBoxSetting | None = SETTING_OPTION,
    level: int | None = LEVEL_OPTION,
    distractors: int | None = DISTRACTORS_OPTION,
) -> None:
    from farmrl.envs import EnvConfig

    fields = {k: v for k, v in _env_overrides(dancers, variant, setting, level, distractors).items() if v is not None}
    env_debug(EnvConfig(name=env, **fields), seed, list(actions or []))


@app.command(
    name="live-test",
    hidden=True,
    help="Trains the smoke preset and checks that greedy level-1 success clears the regression bound.",
)
@exit_codes
def live_test(
    out: Path = typer.Option(Path("runs/live_test"), "-o", "--out", help="Run directory."),
    frames: int = typer.Option(SMOKE_FRAME_BUDGET, "--frames", help="Frame budget."),
    seed: int = typer.Option(0, "--seed", help="Run seed."),
) -> None:
    smoke_training_run(out, frames, seed)


if __name__ == "__main__":
    app()
