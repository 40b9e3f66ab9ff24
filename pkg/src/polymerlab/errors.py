"""Exception and warning types shared across the package."""


class PolymerLabError(Exception):
    """Base class for all package errors."""


class DomainError(PolymerLabError, ValueError):
    """Argument outside the domain where a quantity is defined."""


class CapacityError(PolymerLabError, MemoryError):
    """Requested size exceeds the configured memory or time budget."""


class TuningError(PolymerLabError, RuntimeError):
    """Root finding for the critical window failed."""


class UnsupportedError(PolymerLabError, NotImplementedError):
    """Operation not available for the given configuration."""


class SingularPointError(DomainError):
    """Evaluation requested at a genuine singularity."""


class PrecisionWarning(UserWarning):
    """Requested accuracy was not reached within the sample or iteration budget."""


class DivergingSeriesWarning(UserWarning):
    """Geometric weights large enough that a series may not converge."""


class CacheError(PolymerLabError, OSError):
    """A cache file is missing its header, has the wrong version or is truncated."""
