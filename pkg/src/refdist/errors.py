"""Exception types raised across the package."""


class RefdistError(Exception):
    """Base class for all refdist-specific errors."""


class DegenerateSymmetricError(RefdistError):
    """Quantile triple is symmetric within tolerance; the shift parameter diverges.

    Use a plain normal fit for such tests instead.
    """


class LeftSkewUnsupportedError(RefdistError):
    """Quantile triple is left-skewed; the shifted lognormal cannot represent it.

    Fit the negated axis and mirror the result (see
    ``solve_mirrored_lnorm3_from_triple``) if a left-skewed fit is wanted.
    """


class EmptyHistogramError(RefdistError):
    """Histogram has no mass (all frequencies zero)."""


class SimplexInitError(RefdistError):
    """Objective is not finite at one of the initial simplex vertices."""


class BandwidthError(RefdistError):
    """Automatic KDE bandwidth is degenerate (no spread in the samples)."""


class MissingPredictionError(RefdistError):
    """A computed direction record has no matching prediction entry."""


class GridRangeError(RefdistError):
    """Requested evaluation range does not cover the distributions' support."""


class SupportError(RefdistError):
    """Distributions share no usable support on the requested grid."""


class InsufficientDataError(RefdistError):
    """A statistical group has fewer elements than the test requires."""


class EmptyCohortError(RefdistError):
    """Exclusion rules removed every sample from a cohort."""
