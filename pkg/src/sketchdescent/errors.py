"""Exception types shared across the package.

Everything user-facing derives from SketchDescentError so callers can catch
one base class. Input problems are ValueErrors as well, so code written
against plain numpy conventions keeps working.
"""


class SketchDescentError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(SketchDescentError, ValueError):
    """Malformed argument: wrong shape, wrong dtype, out-of-range value."""


class InvalidConfigError(SketchDescentError, ValueError):
    """Solver or benchmark configuration violates a documented constraint."""


class NotPsdError(SketchDescentError, ValueError):
    """Matrix required to be positive semidefinite has a negative eigenvalue."""


class NotSpdError(SketchDescentError, ValueError):
    """Matrix required to be symmetric positive definite is not."""


class NumericalFailureError(SketchDescentError, RuntimeError):
    """An iterative kernel (eigensolver, factorization) failed to converge."""


class DivergenceError(SketchDescentError, RuntimeError):
    """Iterates blew up or went non-finite.

    Carries the trace recorded up to the failure in ``trace`` (may be None).
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class SizeLimitError(SketchDescentError, ValueError):
    """Problem too large for a dense desk-scale routine."""


class UnsupportedFormatError(SketchDescentError, ValueError):
    """File header declares a format variant this package does not read."""


class MalformedFileError(SketchDescentError, ValueError):
    """File parsed but violates its own declared structure."""


class ParseError(SketchDescentError, ValueError):
    """A token in the file could not be parsed at all."""


class EmptyMatrixError(SketchDescentError, ValueError):
    """File contained no usable rows."""
