from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator

from farmrl.enums import BalletAction, BalletVariant, Color, EnvName, GridAction, KeyBoxSetting, ObjectKind
from farmrl.envs.abstract_mdp import AbstractMDPEnv
from farmrl.envs.ballet import BalletEnv
from farmrl.envs.base import BaseGridEnv
from farmrl.envs.keybox import KeyBoxEnv
from farmrl.envs.motions import motion_tokens
from farmrl.envs.putnext import MAX_DISTRACTORS, PutNextEnv
from farmrl.nets.vocabulary import Vocabulary

BALLET_DANCER_COUNTS = (2, 4, 8)


class EnvConfig(BaseModel):
    """
    Selects an environment and its per-env options. Options that do not apply to the chosen env are ignored.

    Attributes
    ----------
    name : EnvName
    dancers : int
        Ballet dancers, one of 2, 4 or 8.
    variant : BalletVariant
    instruction_steps : int
        Ballet decision budget after the instruction appears.
    setting : KeyBoxSetting
    level : int | None
        KeyBox start level. None follows the curriculum.
    max_level : int | None
        Last KeyBox level of an episode. None means max(10, start level).
    distractors : int
        PutNext distractors.
    master_seed : int
        Seed of the AbstractMDP placement table.
    render : bool
        Produce observation frames.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: EnvName = EnvName.KEYBOX
    dancers: int = 2
    variant: BalletVariant = BalletVariant.SEQUENTIAL
    instruction_steps: int = 40
    setting: KeyBoxSetting = KeyBoxSetting.DENSE
    level: int | None = Field(default=None, ge=1)
    max_level: int | None = Field(default=None, ge=1)
    distractors: int = 0
    master_seed: int = 0
    render: bool = True

    @field_validator("dancers")
    @classmethod
    def validate_dancers(cls, dancers: int, info: ValidationInfo) -> int:
        if info.data.get("name") == EnvName.BALLET and dancers not in BALLET_DANCER_COUNTS:
            raise ValueError(f"dancers must be one of {BALLET_DANCER_COUNTS}, got {dancers}.")
        return dancers

    @field_validator("distractors")
    @classmethod
    def validate_distractors(cls, distractors: int, info: ValidationInfo) -> int:
        if info.data.get("name") == EnvName.PUTNEXT and not 0 <= distractors <= MAX_DISTRACTORS:
            raise ValueError(
                f"distractors must be in 0..{MAX_DISTRACTORS} for the PutNext room, got {distractors}."
            )
        return distractors

    @property
    def num_actions(self) -> int:
        return len(BalletAction) if self.name == EnvName.BALLET else len(GridAction)

    @property
    def image_size(self) -> int:
        return 99 if self.name == EnvName.BALLET else 56


def make_env(config: EnvConfig) -> BaseGridEnv:
    """Builds the environment the config selects."""
    if config.name == EnvName.BALLET:
        return BalletEnv(config.dancers, config.variant, config.instruction_steps, render=config.render)
    if config.name == EnvName.KEYBOX:
        return KeyBoxEnv(config.setting, config.level, config.max_level, render=config.render)
    if config.name == EnvName.PUTNEXT:
        return PutNextEnv(config.distractors, render=config.render)
    if config.name == EnvName.ABSTRACT_MDP:
        return AbstractMDPEnv(config.master_seed, render=config.render)
    raise ValueError(f"Unknown environment {config.name}. Choose one of {EnvName.choices()}.")


def instruction_vocabulary() -> Vocabulary:
    """Every word an environment can put in its task tokens."""
    words = set(motion_tokens())
    words |= {"put", "the", "next", "to"}
    words |= {str(c) for c in Color}
    words |= {str(k) for k in (ObjectKind.BALL, ObjectKind.KEY, ObjectKind.BOX)}
    return Vocabulary.from_words(words)
