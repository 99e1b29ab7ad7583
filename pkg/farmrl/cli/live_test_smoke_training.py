from pathlib import Path

from rich import print

from farmrl.cli.controller import train_run
from farmrl.farm import FarmAgent
from farmrl.run_config import preset_config
from farmrl.tensor import load_checkpoint
from farmrl.trainer import EvalReport, evaluate, frames_to_success, read_metrics
from farmrl.trainer.train import checked_vocabulary

SMOKE_SUCCESS_BOUND = 0.9
SMOKE_FRAME_BUDGET = 400_000
SMOKE_EVAL_EPISODES = 100


def smoke_training_run(out_dir: Path, total_frames: int = SMOKE_FRAME_BUDGET, seed: int = 0) -> EvalReport:
    """Trains the smoke agent on level-1 dense KeyBox and evaluates its last checkpoint greedily.

    Prints the frames at which the training success rate first reached SMOKE_SUCCESS_BOUND, the number to compare
    against SMOKE_FRAME_BUDGET.

    Raises
    ------
    RuntimeError
        If the run wrote no checkpoint, or greedy success stays below SMOKE_SUCCESS_BOUND.
    """
    config = preset_config("smoke").with_changes(out=out_dir, seed=seed, trainer={"total_frames": total_frames})
    run_dir = train_run(config)
    summary = run_dir.read_summary()
    if summary.latest_checkpoint is None:
        raise RuntimeError(f"The smoke run in {out_dir} wrote no checkpoint.")
    reached = frames_to_success(read_metrics(run_dir.metrics_path), SMOKE_SUCCESS_BOUND)
    if reached is None:
        print(f"[yellow]Training success never reached {SMOKE_SUCCESS_BOUND} within {total_frames:,} frames.")
    else:
        print(f"[dim]Training success first reached {SMOKE_SUCCESS_BOUND} after {reached:,} frames.")
    agent = FarmAgent(config.agent_config, seed=seed)
    agent.load_parameters(load_checkpoint(run_dir.path / summary.latest_checkpoint))
    vocabulary = checked_vocabulary(config.agent_config.language.vocab_size)
    report = evaluate(agent, config.env, vocabulary, SMOKE_EVAL_EPISODES, seed=seed + 1, greedy=True)
    success = report.mean_success or 0.0
    if success < SMOKE_SUCCESS_BOUND:
        raise RuntimeError(f"Smoke run success {success:.3f} is below the bound {SMOKE_SUCCESS_BOUND}.")
    print(f"[bold green]Smoke run success {success:.3f} (bound {SMOKE_SUCCESS_BOUND}).")
    return report
