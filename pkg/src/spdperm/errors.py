"""Exception types raised across the package."""


class SpdPermError(Exception):
    """Base class for all spdperm errors."""


class NonFinite(SpdPermError, ValueError):
    """An input contained NaN or infinity."""


class NotPositiveDefinite(SpdPermError, ValueError):
    """A tensor failed the positive-definiteness check."""


class NotARotation(SpdPermError, ValueError):
    """A matrix is not a proper rotation (orthogonal, determinant +1)."""


class NonPositiveValue(SpdPermError, ValueError):
    """A quantity that must be strictly positive was not."""


class EmptyInput(SpdPermError, ValueError):
    """An operation requiring a nonempty collection received an empty one."""


class DegenerateMean(SpdPermError, ArithmeticError):
    """Quaternion averaging collapsed (aligned sum has near-zero norm)."""


class NoConvergence(SpdPermError, RuntimeError):
    """An iterative solver hit its iteration cap before reaching tolerance.

    Carries the last iterate and the final relative step norm so callers
    can inspect how far the iteration got.
    """

    def __init__(self, message, last_iterate=None, step_norm=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.step_norm = step_norm


class GroupTooSmall(SpdPermError, ValueError):
    """A dispersion was requested for a group with fewer than two members."""


class BadWeights(SpdPermError, ValueError):
    """Group weights must be strictly positive and sum to one."""


class EnumerationTooLarge(SpdPermError, ValueError):
    """Full enumeration was requested but the assignment count exceeds the cap."""


class MeasurePairingError(SpdPermError, ValueError):
    """A mean-based statistic was asked to mix a mean with a foreign distance."""
