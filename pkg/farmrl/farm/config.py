from typing import Any

from pydantic import BaseModel, ConfigDict, model_validator

from farmrl.tensor import ShapeError


class EncoderConfig(BaseModel):
    """
    Recurrent observation encoder: a ResNet followed by a ConvLSTM.

    Attributes
    ----------
    image_size : int
        Height and width of the square RGB observation (99 for Ballet, 56 for the egocentric grid tasks).
    channels : tuple[int, ...]
        ResNet stage channels.
    blocks : tuple[int, ...]
        Residual blocks per stage.
    kernel_size : int
        Kernel size of every convolution.
    feature_dim : int
        ConvLSTM channels, d_z.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    image_size: int = 56
    channels: tuple[int, ...] = (16, 32, 32)
    blocks: tuple[int, ...] = (2, 2, 2)
    kernel_size: int = 3
    feature_dim: int = 32

    @model_validator(mode="after")
    def validate_encoder(self) -> "EncoderConfig":
        if len(self.channels) != len(self.blocks):
            raise ValueError(f"channels {self.channels} and blocks {self.blocks} must have the same length.")
        if self.kernel_size % 2 == 0:
            raise ValueError(f"kernel_size must be odd for SAME padding, got {self.kernel_size}.")
        if self.image_size // 2 ** len(self.channels) < 1:
            raise ValueError(f"image_size {self.image_size} is too small for {len(self.channels)} stride-2 stages.")
        return self

    @property
    def grid_size(self) -> int:
        return self.image_size // 2 ** len(self.channels)

    @property
    def num_positions(self) -> int:
        """m, the number of rows of Z."""
        return self.grid_size * self.grid_size


class LanguageConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    vocab_size: int = 1000
    embedding_dim: int = 128
    hidden_size: int = 128


class FarmConfig(BaseModel):
    """
    The FARM core: n recurrent modules with feature attention and information sharing.

    Attributes
    ----------
    n_modules : int
        Number of modules.
    d_h : int
        Hidden size of every module LSTM.
    projection_dim : int
        Width of the shared W_1 and W_2 feature projections.
    sharing_heads : int
        Attention heads used for information sharing. Must divide d_h.
    feature_attention_enabled : bool
        When False, coefficients are fixed at 1 and modules own no W_att.
    sharing_enabled : bool
        When False, modules read nothing from each other and own no sharing projections.
    init_state_std : float
        Standard deviation of the learned initial module states.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    n_modules: int = 8
    d_h: int = 128
    projection_dim: int = 16
    sharing_heads: int = 4
    feature_attention_enabled: bool = True
    sharing_enabled: bool = True
    init_state_std: float = 0.1

    @model_validator(mode="after")
    def validate_dims(self) -> "FarmConfig":
        for field in ("n_modules", "d_h", "projection_dim", "sharing_heads"):
            if getattr(self, field) < 1:
                raise ValueError(f"{field} must be >= 1, got {getattr(self, field)}.")
        if self.d_h % self.sharing_heads != 0:
            raise ValueError(
                f"sharing_heads ({self.sharing_heads}) must divide d_h ({self.d_h})."
            )
        return self

    @property
    def head_dim(self) -> int:
        return self.d_h // self.sharing_heads

    @property
    def policy_state_size(self) -> int:
        return self.n_modules * self.d_h


class AgentConfig(BaseModel):
    """
    Everything needed to build a FarmAgent.

    Attributes
    ----------
    encoder : EncoderConfig
    language : LanguageConfig
    farm : FarmConfig
    num_actions : int
        Size of the policy head and of the one-hot previous-action encoding.
    head_hidden : int
        Hidden units of the policy and value MLPs.
    zero_init_heads : bool
        Start both head output layers at zero.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    encoder: EncoderConfig = EncoderConfig()
    language: LanguageConfig = LanguageConfig()
    farm: FarmConfig = FarmConfig()
    num_actions: int = 7
    head_hidden: int = 200
    zero_init_heads: bool = False

    @model_validator(mode="after")
    def validate_actions(self) -> "AgentConfig":
        if self.num_actions < 1:
            raise ValueError(f"num_actions must be >= 1, got {self.num_actions}.")
        return self

    @property
    def context_size(self) -> int:
        """Length of a module context [task, h_prev, one-hot action, reward]."""
        return self.language.hidden_size + self.farm.d_h + self.num_actions + 1

    def check_image(self, shape: tuple[int, ...]) -> None:
        expected = (self.encoder.image_size, self.encoder.image_size, 3)
        if tuple(shape) != expected:
            raise ShapeError(f"Agent expects {expected} observations, got {tuple(shape)}.")

    def with_farm(self, **changes: Any) -> "AgentConfig":
        """Copy with FarmConfig fields replaced, eg: config.with_farm(n_modules=1, feature_attention_enabled=False)."""
        return self.model_copy(update={"farm": self.farm.model_copy(update=changes)})

    @classmethod
    def keybox(cls) -> "AgentConfig":
        """8 modules of 128, 4 sharing heads, 56×56 egocentric view, 7 actions. About 7.6M parameters."""
        return cls(
            encoder=EncoderConfig(image_size=56),
            farm=FarmConfig(n_modules=8, d_h=128, sharing_heads=4),
            num_actions=7,
        )

    @classmethod
    def ballet(cls) -> "AgentConfig":
        """4 modules of 128, 2 sharing heads, 99×99 full view, 5 actions. About 6.9M parameters."""
        return cls(
            encoder=EncoderConfig(image_size=99),
            farm=FarmConfig(n_modules=4, d_h=128, sharing_heads=2),
            num_actions=5,
        )

    @classmethod
    def putnext(cls) -> "AgentConfig":
        return cls(
            encoder=EncoderConfig(image_size=56),
            farm=FarmConfig(n_modules=4, d_h=128, sharing_heads=2),
            num_actions=7,
        )

    @classmethod
    def abstract_mdp(cls) -> "AgentConfig":
        """4 modules of 20 units, the configuration the module-sum analysis requires."""
        return cls(
            encoder=EncoderConfig(image_size=56),
            farm=FarmConfig(n_modules=4, d_h=20, sharing_heads=2),
            num_actions=7,
        )

    @classmethod
    def smoke(cls) -> "AgentConfig":
        """2 modules of 32 on 56×56 observations, for desk-scale learning runs."""
        return cls(
            encoder=EncoderConfig(image_size=56),
            farm=FarmConfig(n_modules=2, d_h=32, sharing_heads=2),
            num_actions=7,
        )

    @classmethod
    def tiny(cls, num_actions: int = 3) -> "AgentConfig":
        """2 modules of 8 on 8×8 observations with a 2-stage encoder. Small enough for full gradient checks."""
        return cls(
            encoder=EncoderConfig(image_size=8, channels=(4, 4), blocks=(1, 1), feature_dim=4),
            language=LanguageConfig(vocab_size=16, embedding_dim=6, hidden_size=6),
            farm=FarmConfig(n_modules=2, d_h=8, projection_dim=4, sharing_heads=2),
            num_actions=num_actions,
            head_hidden=8,
        )
