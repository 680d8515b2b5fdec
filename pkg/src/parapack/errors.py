"""Exception types shared across the package."""


class ParapackError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(ParapackError):
    """A physical parameter is missing, non-finite or out of range."""


class ModelConstructionError(ParapackError):
    """Assembled model matrices failed a build-time consistency check."""


class InternalConsistencyError(ParapackError):
    """Redundant internal computations disagree beyond tolerance."""


class OcvDomainError(ParapackError):
    """Open-circuit voltage requested outside the calibrated SOC range."""


class MonotonicityError(ParapackError):
    """OCV curve is not strictly increasing over the SOC range."""


class SingularMatrixError(ParapackError):
    """Elimination hit a pivot too small to divide by."""

    def __init__(self, message: str, pivot_index: int | None = None):
        super().__init__(message)
        self.pivot_index = pivot_index


class DivergenceError(ParapackError):
    """Integration produced a non-finite state."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class GainDesignError(ParapackError):
    """Requested observer gain fails the per-cell stability gate."""


class ConfigError(ParapackError):
    """Configuration file is malformed or semantically invalid."""
