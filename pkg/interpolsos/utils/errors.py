"""
Exception types raised by the interpolsos library.

Every error derives from InterpolSosError so the CLI exception handler can
catch the whole family; most also derive from a builtin type so callers that
only know about ValueError and friends keep working.
"""

from typing import Optional


class InterpolSosError(Exception):
    """Base class for all library errors."""


class ZeroPolynomialError(InterpolSosError, ValueError):
    pass


class DimensionError(InterpolSosError, ValueError):
    pass


class VariableError(InterpolSosError, ValueError):
    pass


class ParseError(InterpolSosError, ValueError):
    """Syntax or declaration error in a problem or interpolant file."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        self.message = message
        super().__init__(f"line {line}, column {column}: {message}")


class PartitionError(InterpolSosError, ValueError):
    pass


class DegreeBoundError(InterpolSosError, ValueError):
    pass


class ModeError(InterpolSosError, ValueError):
    pass


class SdpLimitError(InterpolSosError, ValueError):
    pass


class SdpaParseError(InterpolSosError, ValueError):
    def __init__(self, message: str, offset: Optional[int] = None):
        self.offset = offset
        where = f" at byte {offset}" if offset is not None else ""
        super().__init__(f"{message}{where}")


class StructureMismatchError(InterpolSosError, ValueError):
    pass


class NothingToExportError(InterpolSosError, ValueError):
    pass


class NotFeasibleError(InterpolSosError, ValueError):
    pass


class DegenerateInterpolantError(InterpolSosError, ArithmeticError):
    pass


class CertificateShapeError(InterpolSosError, ValueError):
    pass


class NoSamplesError(InterpolSosError, RuntimeError):
    pass


class PlotDimensionError(InterpolSosError, ValueError):
    pass
