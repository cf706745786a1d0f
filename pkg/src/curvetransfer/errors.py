"""Exception types shared across the package."""


class DataValidationError(ValueError):
    """Raised when input data (CSV, manifest, curve, plan) fails validation."""


class TrainingDivergenceError(RuntimeError):
    """Raised when a training loss becomes non-finite."""
