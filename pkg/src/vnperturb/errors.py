"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`PerturbationError`, so callers (notably the trial harness) can
record failures without swallowing genuine bugs.
"""


class PerturbationError(Exception):
    """Base class for all package errors."""


class InvalidInputError(PerturbationError, ValueError):
    """Raised for malformed matrices: wrong shape, NaN or infinite entries."""


class RankDeficiencyError(PerturbationError):
    """Raised when a matrix that must be invertible is numerically singular."""


class SpectralGapError(PerturbationError):
    """Raised when an eigenvalue sits on the boundary of a spectral interval."""


class HypothesisError(PerturbationError):
    """Raised when a quantitative hypothesis (a norm below some threshold) fails."""


class InclusionError(PerturbationError):
    """Raised when one subalgebra is required to sit inside another and does not."""


class DomainError(PerturbationError):
    """Raised when a map is applied outside the span it is defined on."""


class CornerDecodingError(PerturbationError):
    """Raised when an operator does not lie in the corner of the basic construction."""


class BoundViolationError(PerturbationError):
    """Raised when a runtime estimate exceeds the bound the construction guarantees."""


class CertificateError(PerturbationError):
    """Raised when an isomorphism certificate cannot be inverted or is inconsistent."""


class PipelineError(PerturbationError):
    """Raised when an intermediate object of the conjugation pipeline has the wrong form."""
