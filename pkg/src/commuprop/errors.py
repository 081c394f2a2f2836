"""Exception hierarchy shared by every module in the package."""


class CommupropError(Exception):
    """Base class for all package errors."""


class DimensionError(CommupropError, ValueError):
    pass


class NotHermitianError(CommupropError, ValueError):
    pass


class IntervalError(CommupropError, ValueError):
    pass


class ParseError(CommupropError, ValueError):
    """Raised for malformed coefficient expressions.

    ``position`` is the 0-based character offset of the offending token.
    """

    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class QuadratureError(CommupropError, ArithmeticError):
    pass


class NotCommutativeError(CommupropError):
    pass


class DecompositionError(CommupropError):
    pass


class UnphysicalStateError(CommupropError):
    def __init__(self, message, t=None):
        self.t = t
        super().__init__(message)
