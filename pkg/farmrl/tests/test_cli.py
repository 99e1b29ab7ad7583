from pathlib import Path

from typer.testing import CliRunner

from farmrl.cli.cli import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, app
from farmrl.tests.conftest import FIXTURES

runner = CliRunner()

TINY_RUN = """
seed = 0

[env]
name = "keybox"
level = 1
max_level = 1

[model]
preset = "smoke"

[trainer]
n_actors = 1
unroll_length = 3
total_frames = 6
checkpoint_every = 1
"""


class TestCli:
    def test_help_hides_live_test(self) -> None:
        result = runner.invoke(app, ["--help"])
        assert result.exit_code == EXIT_OK
        for command in ("train", "eval", "analyze", "env-debug"):
            assert command in result.output
        assert "live-test" not in result.output

    def test_env_debug(self) -> None:
        result = runner.invoke(app, ["env-debug", "--env", "abstractmdp", "--seed", "2", "2", "2"])
        assert result.exit_code == EXIT_OK, result.output
        assert "abstractmdp seed=2" in result.output
        assert result.output.count("action 2 ->") == 2
        assert "#" in result.output

    def test_env_debug_rejects_bad_options(self) -> None:
        result = runner.invoke(app, ["env-debug", "--env", "ballet", "--dancers", "3"])
        assert result.exit_code == EXIT_VALIDATION
        assert "dancers" in result.output

    def test_eval_zero_episodes(self) -> None:
        result = runner.invoke(app, ["eval", "--preset", "smoke", "--policy", "random", "-n", "0"])
        assert result.exit_code == EXIT_OK, result.output
        assert "No episodes evaluated" in result.output

    def test_eval_negative_episodes(self) -> None:
        result = runner.invoke(app, ["eval", "--preset", "smoke", "--policy", "random", "-n", "-1"])
        assert result.exit_code == EXIT_VALIDATION

    def test_eval_needs_checkpoint_or_policy(self) -> None:
        result = runner.invoke(app, ["eval", "--preset", "smoke", "-n", "1"])
        assert result.exit_code == EXIT_VALIDATION
        assert "Invalid configuration" in result.output

    def test_eval_missing_checkpoint_is_a_runtime_error(self, tmp_path: Path) -> None:
        result = runner.invoke(app, ["eval", "--preset", "smoke", "--checkpoint", str(tmp_path / "nothing"), "-n", "1"])
        assert result.exit_code == EXIT_RUNTIME
        assert "CheckpointError" in result.output

    def test_analyze_needs_checkpoint(self, tmp_path: Path) -> None:
        result = runner.invoke(app, ["analyze", "--preset", "smoke", "-o", str(tmp_path / "bundle")])
        assert result.exit_code == EXIT_VALIDATION
        assert not (tmp_path / "bundle").exists()

    def test_invalid_config_file(self) -> None:
        result = runner.invoke(app, ["train", "--config", str(FIXTURES / "bad_field.toml")])
        assert result.exit_code == EXIT_VALIDATION
        assert "env.dancers" in result.output

    def test_config_and_preset_are_exclusive(self) -> None:
        result = runner.invoke(app, ["train", "--config", str(FIXTURES / "smoke.toml"), "--preset", "smoke"])
        assert result.exit_code == EXIT_VALIDATION

    def test_train_then_eval(self, tmp_path: Path) -> None:
        config = tmp_path / "tiny.toml"
        config.write_text(TINY_RUN)
        run = tmp_path / "run"
        result = runner.invoke(app, ["train", "--config", str(config), "-o", str(run)])
        assert result.exit_code == EXIT_OK, result.output
        assert (run / "config.toml").read_text() == TINY_RUN
        assert (run / "summary.json").is_file()

        report = tmp_path / "report.json"
        result = runner.invoke(
            app, ["eval", "--config", str(config), "--checkpoint", f"{run}:latest", "-n", "1", "-o", str(report)]
        )
        assert result.exit_code == EXIT_OK, result.output
        assert '"episodes": 1' in report.read_text()
        assert "sha256" in result.output

    def test_eval_rejects_tampered_checkpoint(self, tmp_path: Path) -> None:
        config = tmp_path / "tiny.toml"
        config.write_text(TINY_RUN)
        run = tmp_path / "run"
        assert runner.invoke(app, ["train", "--config", str(config), "-o", str(run)]).exit_code == EXIT_OK
        checkpoint = sorted((run / "checkpoints").glob("*.farm"))[-1]
        data = bytearray(checkpoint.read_bytes())
        data[-1] ^= 0xFF
        checkpoint.write_bytes(bytes(data))
        result = runner.invoke(app, ["eval", "--config", str(config), "--checkpoint", f"{run}:latest", "-n", "1"])
        assert result.exit_code == EXIT_RUNTIME
        assert "CheckpointError" in result.output
