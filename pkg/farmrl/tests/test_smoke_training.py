from pathlib import Path

import pytest

from farmrl.cli.live_test_smoke_training import SMOKE_SUCCESS_BOUND, smoke_training_run


@pytest.mark.slow
def test_smoke_agent_learns_level_one(tmp_path: Path) -> None:
    report = smoke_training_run(tmp_path / "smoke")
    assert report.mean_success is not None
    assert report.mean_success >= SMOKE_SUCCESS_BOUND
