"""Exception types raised across the package."""


class WrcError(Exception):
    """Base class for all package errors."""


class LengthMismatchError(WrcError, ValueError):
    pass


class TiesPresentError(WrcError, ValueError):
    """Raised when an input column contains tied values.

    Attributes
    ----------
    column : str
        ``"x"`` or ``"y"``.
    values : list
        The tied values (sorted, unique).
    """

    def __init__(self, column, values):
        self.column = column
        self.values = list(values)
        shown = ", ".join(repr(v) for v in self.values[:5])
        more = "" if len(self.values) <= 5 else ", ..."
        super().__init__(f"ties in column {column}: {shown}{more}")


class DegenerateSizeError(WrcError, ValueError):
    pass


class NonPositiveWeightError(WrcError, ValueError):
    pass


class CapExceededError(WrcError, ValueError):
    def __init__(self, n, cap):
        self.n = n
        self.cap = cap
        super().__init__(f"exact enumeration requested for n={n}, above the cap n<={cap}")


class InsufficientRepsError(WrcError, ValueError):
    pass


class UnsupportedCombinationError(WrcError, ValueError):
    pass


class EmptyDistributionError(WrcError, ValueError):
    pass


class ROutOfRangeError(WrcError, ValueError):
    pass


class ParameterOutOfDomainError(WrcError, ValueError):
    pass


class MethodUnavailableError(WrcError, ValueError):
    pass


class UnsupportedFamilyError(WrcError, ValueError):
    pass


class SlopeUnstableError(WrcError, ArithmeticError):
    pass


class InsufficientNullRepsError(InsufficientRepsError):
    pass
