class ModelConfigError(ValueError):
    """The analysis was asked to run against a model configured differently from what it requires."""
