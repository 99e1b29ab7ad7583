import json
import re
import tomllib
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from farmrl.analysis.config import AnalysisConfig
from farmrl.enums import BalletVariant, EnvName, KeyBoxSetting, ModelPreset
from farmrl.envs import EnvConfig
from farmrl.farm import AgentConfig, FarmConfig
from farmrl.trainer.config import TrainerConfig


class ConfigError(ValueError):
    """A run config that does not parse or does not validate. The message names the line or the section.field."""


class ModelConfig(BaseModel):
    """
    Agent block of a run config: a preset plus optional overrides, eg: the 1-module, no-feature-attention ablation is
    `n_modules = 1` and `feature_attention = false`.

    Attributes
    ----------
    preset : ModelPreset
    n_modules : int | None
    d_h : int | None
    sharing_heads : int | None
    projection_dim : int | None
    feature_attention : bool
    sharing : bool
    head_hidden : int | None
    zero_init_heads : bool
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    preset: ModelPreset = ModelPreset.SMOKE
    n_modules: int | None = None
    d_h: int | None = None
    sharing_heads: int | None = None
    projection_dim: int | None = None
    feature_attention: bool = True
    sharing: bool = True
    head_hidden: int | None = None
    zero_init_heads: bool = False

    def build(self, num_actions: int) -> AgentConfig:
        base: AgentConfig = getattr(AgentConfig, str(self.preset))()
        overrides = {
            "n_modules": self.n_modules,
            "d_h": self.d_h,
            "sharing_heads": self.sharing_heads,
            "projection_dim": self.projection_dim,
        }
        farm = FarmConfig.model_validate(
            {
                **base.farm.model_dump(),
                **{k: v for k, v in overrides.items() if v is not None},
                "feature_attention_enabled": self.feature_attention,
                "sharing_enabled": self.sharing,
            }
        )
        return AgentConfig(
            encoder=base.encoder,
            language=base.language,
            farm=farm,
            num_actions=num_actions,
            head_hidden=self.head_hidden or base.head_hidden,
            zero_init_heads=self.zero_init_heads,
        )


class RunConfig(BaseModel):
    """
    Everything a run is reproducible from, together with the code version.

    Attributes
    ----------
    seed : int
    out : Path
        Run directory.
    env : EnvConfig
    model : ModelConfig
    trainer : TrainerConfig
    analysis : AnalysisConfig
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    seed: int = 0
    out: Path = Path("runs/default")
    env: EnvConfig = EnvConfig()
    model: ModelConfig = ModelConfig()
    trainer: TrainerConfig = TrainerConfig()
    analysis: AnalysisConfig = AnalysisConfig()

    @model_validator(mode="after")
    def validate_image_size(self) -> "RunConfig":
        agent = self.agent_config
        if agent.encoder.image_size != self.env.image_size:
            raise ValueError(
                f"model preset {self.model.preset} expects {agent.encoder.image_size}×{agent.encoder.image_size} "
                f"frames but {self.env.name} renders {self.env.image_size}×{self.env.image_size}."
            )
        return self

    @property
    def agent_config(self) -> AgentConfig:
        return self.model.build(self.env.num_actions)

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True)

    def with_changes(self, **sections: Any) -> "RunConfig":
        """A validated copy with top-level fields or section fields replaced, eg: with_changes(env={"level": 20})."""
        data = self.model_dump()
        for key, value in sections.items():
            if isinstance(value, dict) and isinstance(data.get(key), dict):
                data[key] = {**data[key], **value}
            else:
                data[key] = value
        return RunConfig.model_validate(data)


def _preset_data() -> dict[str, dict[str, Any]]:
    return {
        "ballet": {
            "env": {"name": EnvName.BALLET, "dancers": 4, "variant": BalletVariant.SEQUENTIAL},
            "model": {"preset": ModelPreset.BALLET},
            "trainer": {"unroll_length": 80, "episode_aligned": True, "total_frames": 2_000_000},
            "out": "runs/ballet",
        },
        "ballet_parallel": {
            "env": {"name": EnvName.BALLET, "dancers": 4, "variant": BalletVariant.PARALLEL},
            "model": {"preset": ModelPreset.BALLET},
            "trainer": {"unroll_length": 80, "episode_aligned": True, "total_frames": 2_000_000},
            "out": "runs/ballet_parallel",
        },
        "keybox_dense": {
            "env": {"name": EnvName.KEYBOX, "setting": KeyBoxSetting.DENSE},
            "model": {"preset": ModelPreset.KEYBOX},
            "out": "runs/keybox_dense",
        },
        "keybox_sparse": {
            "env": {"name": EnvName.KEYBOX, "setting": KeyBoxSetting.SPARSE},
            "model": {"preset": ModelPreset.KEYBOX},
            "out": "runs/keybox_sparse",
        },
        "putnext": {
            "env": {"name": EnvName.PUTNEXT, "distractors": 4},
            "model": {"preset": ModelPreset.PUTNEXT},
            "out": "runs/putnext",
        },
        "abstract_mdp": {
            "env": {"name": EnvName.ABSTRACT_MDP},
            "model": {"preset": ModelPreset.ABSTRACT_MDP},
            "trainer": {"unroll_length": 16, "episode_aligned": True},
            "out": "runs/abstract_mdp",
        },
        "smoke": {
            "env": {"name": EnvName.KEYBOX, "setting": KeyBoxSetting.DENSE, "level": 1, "max_level": 1},
            "model": {"preset": ModelPreset.SMOKE, "zero_init_heads": True},
            "trainer": {
                "n_actors": 4,
                "unroll_length": 20,
                "total_frames": 400_000,
                "checkpoint_every": 50,
                "optimizer": {"learning_rate": 5e-4},
            },
            "analysis": {"episodes": 50, "level": 1},
            "out": "runs/smoke",
        },
    }


PRESET_NAMES = tuple(_preset_data())


def preset_config(name: str) -> RunConfig:
    presets = _preset_data()
    if name not in presets:
        raise ConfigError(f"Unknown preset {name!r}. Choose one of {list(presets)}.")
    return RunConfig.model_validate(presets[name])


def _field_line(text: str, loc: tuple[int | str, ...]) -> int | None:
    """Line of the `key =` assignment a validation error points at, searched within its [section] header."""
    keys = [str(part) for part in loc if isinstance(part, str)]
    if not keys:
        return None
    *sections, key = keys
    header = f"[{'.'.join(sections)}]" if sections else None
    in_section = header is None
    assignment = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("["):
            in_section = stripped == header
            continue
        if in_section and assignment.match(line):
            return number
    return None


def format_validation_error(error: ValidationError, text: str | None = None, source: str = "config") -> str:
    """One line per problem: "<source>:<line>: section.field: message", the line omitted when not found."""
    lines = []
    for item in error.errors():
        loc = tuple(item["loc"])
        field = ".".join(str(part) for part in loc) or "(root)"
        line = _field_line(text, loc) if text is not None else None
        where = f"{source}:{line}" if line is not None else source
        lines.append(f"{where}: {field}: {item['msg']}")
    return "\n".join(lines)


def parse_run_config(text: str, source: str = "config") -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{source}: {e}") from e
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(format_validation_error(e, text, source)) from e


def load_run_config(path: Path) -> RunConfig:
    """Reads and validates a TOML run config.

    Raises
    ------
    ConfigError
        If the file is missing, is not valid TOML (the message carries line and column) or fails validation (the
        message names each offending section.field and its line).
    """
    if not path.is_file():
        raise ConfigError(f"Config file {path} does not exist.")
    return parse_run_config(path.read_text(), source=str(path))
