"""Exception hierarchy shared by all pathsum modules."""


class PathSumError(Exception):
    """Base class for every error raised by this package."""


class InputError(PathSumError):
    """The user supplied something malformed (bad file, bad expression)."""


class NumericError(PathSumError):
    """A computation could not be carried out on the requested grid."""


class GridMismatchError(PathSumError, ValueError):
    def __init__(self):
        super().__init__("incompatible grids")


class AcausalQueryError(PathSumError, ValueError):
    def __init__(self, i, j):
        super().__init__(f"acausal query: row {i} < column {j}")
        self.i = i
        self.j = j


class CoarseGridError(NumericError):
    """Raised when the implicit trapezoidal step of a resolvent is singular."""

    def __init__(self, index, pivot):
        super().__init__(
            f"grid too coarse for implicit step at node {index} "
            f"(pivot {pivot:.3e}); refine the grid"
        )
        self.index = index
        self.pivot = pivot


class ExpressionSyntaxError(InputError):
    def __init__(self, offset, expected, found):
        exp = ", ".join(sorted(expected))
        super().__init__(
            f"syntax error at offset {offset}: expected one of {{{exp}}}, found {found}"
        )
        self.offset = offset
        self.expected = frozenset(expected)
        self.found = found


class UnknownIdentifierError(InputError):
    def __init__(self, name, offset):
        super().__init__(f"unknown identifier {name!r} at offset {offset}")
        self.name = name
        self.offset = offset


class DomainError(InputError, ArithmeticError):
    """An expression left its domain (log of a non-positive number, 1/0, ...)."""

    def __init__(self, message, t=None):
        if t is not None:
            message = f"{message} at t={t!r}"
        super().__init__(message)
        self.t = t


class MatrixFileError(InputError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


class BlowUpError(NumericError):
    def __init__(self, t):
        super().__init__(f"non-finite state at t={t!r}")
        self.t = t
