import os
from collections.abc import Iterator
from pathlib import Path

import numpy as np
import pytest

from farmrl.enums import EnvName, KeyBoxSetting, Precision
from farmrl.envs import EnvConfig, instruction_vocabulary
from farmrl.farm import AgentConfig, EncoderConfig, FarmAgent, FarmConfig, LanguageConfig
from farmrl.nets import Vocabulary
from farmrl.run_config import RunConfig, preset_config
from farmrl.tensor import set_default_dtype

FIXTURES = Path(__file__).parent / "fixtures"


def pytest_configure(config: pytest.Config) -> None:
    config.addinivalue_line("markers", "slow: desk-scale learning runs, enabled with FARM_RUN_SLOW=1")


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]) -> None:
    if os.environ.get("FARM_RUN_SLOW") == "1":
        return
    skip_slow = pytest.mark.skip(reason="set FARM_RUN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def float32_default() -> Iterator[None]:
    """Trainers switch the global precision; every test starts and ends at float32."""
    set_default_dtype(Precision.FLOAT32)
    yield
    set_default_dtype(Precision.FLOAT32)


def small_agent_config(num_actions: int = 7, image_size: int = 56, n_modules: int = 2) -> AgentConfig:
    """An agent that plays the real 56×56 (or 99×99) environments but steps in milliseconds."""
    return AgentConfig(
        encoder=EncoderConfig(image_size=image_size, channels=(4, 4, 4), blocks=(1, 1, 1), feature_dim=4),
        language=LanguageConfig(vocab_size=40, embedding_dim=6, hidden_size=6),
        farm=FarmConfig(n_modules=n_modules, d_h=8, projection_dim=4, sharing_heads=2),
        num_actions=num_actions,
        head_hidden=8,
    )


@pytest.fixture
def tiny_config() -> AgentConfig:
    return AgentConfig.tiny()


@pytest.fixture
def small_config() -> AgentConfig:
    return small_agent_config()


@pytest.fixture
def small_agent(small_config: AgentConfig) -> FarmAgent:
    return FarmAgent(small_config, seed=0)


@pytest.fixture
def vocabulary() -> Vocabulary:
    return instruction_vocabulary()


@pytest.fixture
def keybox_level1() -> EnvConfig:
    return EnvConfig(name=EnvName.KEYBOX, setting=KeyBoxSetting.DENSE, level=1, max_level=1)


@pytest.fixture
def tiny_image() -> np.ndarray:
    return np.random.default_rng(0).integers(0, 256, size=(8, 8, 3), dtype=np.uint8)


@pytest.fixture
def smoke_run_config(tmp_path: Path) -> RunConfig:
    """The smoke preset cut down to a couple of short updates."""
    return preset_config("smoke").with_changes(
        out=tmp_path / "run",
        trainer={"n_actors": 2, "unroll_length": 3, "total_frames": 12, "checkpoint_every": 1},
        analysis={"episodes": 2, "level": 1, "window": 2},
    )


@pytest.fixture
def smoke_toml() -> str:
    return (FIXTURES / "smoke.toml").read_text()
