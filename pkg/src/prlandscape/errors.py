"""Exception hierarchy shared across the toolkit."""


class PRLandscapeError(Exception):
    """Base class for all toolkit errors."""


class ShapeError(PRLandscapeError):
    """A vector or matrix has the wrong dimensions."""


class NormalizationError(PRLandscapeError):
    """A direction that must be a unit vector is not (caller should normalize)."""


class InvalidSignalError(PRLandscapeError):
    """The planted signal is unusable (zero or non-finite)."""


class FormatError(PRLandscapeError):
    """An ensemble file is malformed; ``offset`` is the byte where parsing failed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class IntegrityError(PRLandscapeError):
    """Loaded or constructed data violates an ensemble invariant."""


class CapacityError(PRLandscapeError):
    """Dense-matrix operation requested above the configured size limit."""


class ConvergenceError(PRLandscapeError):
    """Iterative eigensolver hit its cap; ``residual`` is the last ||Mv - lv||."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class ConfigurationError(PRLandscapeError):
    """A parameter is outside its documented range."""


class DegenerateMomentError(PRLandscapeError):
    """Moment statistics are degenerate (quartic sum A = 0)."""


class SamplingError(PRLandscapeError):
    """A rejection sampler failed to produce any admissible sample."""
