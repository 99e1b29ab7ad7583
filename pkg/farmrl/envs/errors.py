class EpisodeDoneError(RuntimeError):
    """Raised when step is called on an episode that has already ended."""


class UnsolvableLevelError(Exception):
    """Raised by a single level-generation attempt whose layout fails the reachability check."""


class LevelGenerationError(RuntimeError):
    """Raised when no solvable level was generated within the retry budget."""
