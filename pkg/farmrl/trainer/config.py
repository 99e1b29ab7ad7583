from pydantic import BaseModel, ConfigDict, model_validator

from farmrl.enums import Precision


class LossConfig(BaseModel):
    """
    Weights of the V-trace loss terms and the importance-ratio clip thresholds.

    Attributes
    ----------
    baseline_cost : float
        Weight of the squared value error.
    entropy_cost : float
        Weight of the entropy bonus.
    discount : float
        γ. The gridworld tasks use 1.0.
    rho_bar : float
        Clip for the importance ratios in the value targets and advantages.
    c_bar : float
        Clip for the trace-cutting coefficients.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    baseline_cost: float = 0.5
    entropy_cost: float = 0.01
    discount: float = 1.0
    rho_bar: float = 1.0
    c_bar: float = 1.0

    @model_validator(mode="after")
    def validate_constants(self) -> "LossConfig":
        for field in ("baseline_cost", "entropy_cost", "discount", "rho_bar", "c_bar"):
            if getattr(self, field) <= 0:
                raise ValueError(f"{field} must be positive, got {getattr(self, field)}.")
        if self.discount > 1:
            raise ValueError(f"discount must be <= 1, got {self.discount}.")
        return self


class OptimizerConfig(BaseModel):
    """Adam with global gradient-norm clipping."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    learning_rate: float = 1e-4
    epsilon: float = 1e-8
    beta1: float = 0.9
    beta2: float = 0.999
    max_grad_norm: float = 40.0

    @model_validator(mode="after")
    def validate_constants(self) -> "OptimizerConfig":
        if self.learning_rate < 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}.")
        if self.epsilon <= 0 or self.max_grad_norm <= 0:
            raise ValueError("epsilon and max_grad_norm must be positive.")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError(f"betas must lie in [0, 1), got ({self.beta1}, {self.beta2}).")
        return self


class TrainerConfig(BaseModel):
    """
    Actor-learner loop settings.

    Attributes
    ----------
    n_actors : int
        Actors producing one unroll each per update.
    unroll_length : int
        Steps per unroll.
    episode_aligned : bool
        End an unroll early when its episode ends, so every unroll starts at an episode start.
    total_frames : int
        Stop once this many environment steps were consumed.
    checkpoint_every : int
        Updates between checkpoints. The final update is always checkpointed.
    stale_actors : bool
        Split the actors into two halves that alternate between updates, so half of every batch was produced by
        parameters one update old.
    precision : Precision
        Tensor precision for the whole run.
    loss : LossConfig
    optimizer : OptimizerConfig
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    n_actors: int = 8
    unroll_length: int = 40
    episode_aligned: bool = False
    total_frames: int = 1_000_000
    checkpoint_every: int = 100
    stale_actors: bool = False
    precision: Precision = Precision.FLOAT32
    loss: LossConfig = LossConfig()
    optimizer: OptimizerConfig = OptimizerConfig()

    @model_validator(mode="after")
    def validate_sizes(self) -> "TrainerConfig":
        if self.n_actors < 1 or self.unroll_length < 1:
            raise ValueError(
                f"n_actors and unroll_length must be >= 1, got {self.n_actors} and {self.unroll_length}."
            )
        if self.stale_actors and self.n_actors < 2:
            raise ValueError("stale_actors needs at least 2 actors.")
        if self.total_frames < 0 or self.checkpoint_every < 1:
            raise ValueError("total_frames must be >= 0 and checkpoint_every >= 1.")
        return self
