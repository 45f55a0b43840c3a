"""Exception hierarchy shared by every solver stage."""


class CuteError(Exception):
    """Base class for all library errors."""


class NumericError(CuteError):
    """Numerical failure (maps to CLI exit code 3)."""


class NonConvergedEigensolve(NumericError):
    pass


NonConverged = NonConvergedEigensolve


class GridTooCoarse(NumericError):
    pass


class GridMismatch(CuteError, ValueError):
    pass


class BasisTooLarge(CuteError, ValueError):
    def __init__(self, dimension, cap):
        super().__init__(f"basis dimension {dimension} exceeds cap {cap}")
        self.dimension = dimension
        self.cap = cap


class MissingOverlap(CuteError, ValueError):
    pass


class BasisMismatch(CuteError, ValueError):
    pass


class BathTooLarge(CuteError, ValueError):
    pass


class WindowOutsideNyquist(CuteError, ValueError):
    pass


class UnknownSpecies(CuteError, KeyError):
    pass


class OrderMismatch(CuteError, ValueError):
    pass


class OrderTooHigh(CuteError, ValueError):
    pass


class DimensionCap(CuteError, ValueError):
    pass


class NotSymmetric(CuteError, ValueError):
    pass


class BandMiss(CuteError, ValueError):
    pass


class RecurrenceContamination(NumericError):
    pass


class ConfigInvalid(CuteError, ValueError):
    def __init__(self, message, path=()):
        where = "/".join(str(p) for p in path) or "<root>"
        super().__init__(f"{where}: {message}")
        self.path = tuple(path)


class ParseError(ConfigInvalid):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        loc = f" (line {line}, column {column})" if line is not None else ""
        CuteError.__init__(self, f"{message}{loc}")
        self.path = ()
