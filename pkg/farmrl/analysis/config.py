from pydantic import BaseModel, ConfigDict, model_validator


class AnalysisConfig(BaseModel):
    """
    Settings of the representation analysis.

    Attributes
    ----------
    episodes : int
        Episodes to collect traces from.
    level : int
        KeyBox level the traces are collected on.
    window : int
        Half-width k of the event windows [t-k, t+k].
    abstract_mdp_episodes : int
        Episodes of the AbstractMDP module-sum analysis.
    random_seed : int
        Initialization seed of the random-weights control.
    seed : int
        Base seed of the analysis episodes.
    greedy : bool
        Act greedily instead of sampling.
    record_frames : bool
        Save every observation of the analysed episodes next to the episode log.
    workers : int
        Parallel episode threads during trace collection.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    episodes: int = 200
    level: int = 20
    window: int = 5
    abstract_mdp_episodes: int = 1000
    random_seed: int = 1
    seed: int = 0
    greedy: bool = False
    record_frames: bool = False
    workers: int = 1

    @model_validator(mode="after")
    def validate_sizes(self) -> "AnalysisConfig":
        if self.episodes < 0 or self.abstract_mdp_episodes < 0:
            raise ValueError("episode counts must be >= 0.")
        if self.window < 1:
            raise ValueError(f"window must be >= 1 so event windows hold at least 3 steps, got {self.window}.")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}.")
        if self.level < 1:
            raise ValueError(f"level must be >= 1, got {self.level}.")
        return self
