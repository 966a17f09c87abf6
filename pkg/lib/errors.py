from typing import Optional


class GeometryError(Exception):
    """Base class for every error raised by the library"""
    pass


class InvalidDirectionError(GeometryError):
    """Raised when a query direction is zero or not finite"""
    pass


class InvalidParameterError(GeometryError):
    """Raised when a numeric parameter (eps, radius, resolution) is out of range"""
    pass


class SingularMapError(GeometryError):
    """Raised when an affine map has a (numerically) singular linear part"""
    pass


class NotFullDimensionalError(GeometryError):
    """Raised when a body is too flat to be fattened"""
    pass


class DimensionMismatchError(GeometryError):
    pass


class EmptyPolytopeError(GeometryError):
    pass


class InfeasibleError(GeometryError):
    """Raised when a halfspace system has no solution"""
    pass


class UnboundedError(GeometryError):
    pass


class SizeCapError(GeometryError):
    """Raised when an exact oracle would exceed its size cap"""
    pass


class SearchExhaustedError(GeometryError):
    """Raised when a binary search ends without a verdict flip"""
    pass


class ParseError(GeometryError):
    """Raised on malformed input files

    Args:
        message: Human readable description
        line: 1-based line number when the JSON itself is malformed
        field: Dotted path of the offending field when validation fails
    """

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field '{field}'")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")


class UsageError(GeometryError):
    """Raised on malformed command lines (unknown option, bad choice, missing --in)"""
    pass
