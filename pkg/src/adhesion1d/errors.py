"""Exception types shared across the solver."""


class InvalidParameterError(ValueError):
    """A physical or numerical parameter violates its contract."""


class UnsuitableDomainError(ValueError):
    """A sampling domain failed the suitability checks required by the solver."""


class IntegrationFailureError(RuntimeError):
    """Time integration could not proceed (NaN right-hand side, step-size
    collapse, or a positivity violation that step rejection cannot cure)."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


class ConfigError(ValueError):
    """A run configuration file or flag set is invalid; message names the key."""
