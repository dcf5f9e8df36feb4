"""Exception hierarchy shared by the library and the command line."""

from __future__ import annotations


class OuacError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(OuacError, ValueError):
    """Incompatible matrix or subspace dimensions."""


class ParameterError(OuacError, ValueError):
    """A numeric parameter is outside its admissible range.

    ``field`` names the offending parameter when there is one.
    """

    def __init__(self, message: str, *, field: str | None = None):
        self.field = field
        super().__init__(message)


class PreconditionError(OuacError, ValueError):
    """An operation was called on inputs violating its precondition."""


class InapplicableError(OuacError, ValueError):
    """The requested classification does not apply to this input."""


class NumericalFailure(OuacError, ArithmeticError):
    """A floating point computation failed its accuracy check."""


class RangeError(NumericalFailure, OverflowError):
    """A floating point result overflowed."""


class GeometryError(OuacError):
    """A cone arrangement with the required properties could not be built."""


class ValidationError(OuacError, ValueError):
    """A problem file failed to parse or validate.

    ``line`` is the 1-based line in the source file when it is known.
    """

    def __init__(self, message: str, *, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if field:
            prefix += f"{field}: "
        super().__init__(prefix + message)
