"""Exception types raised by opmod."""


class OpmodError(Exception):
    """Base class for all library errors."""


class InvalidFamily(OpmodError, ValueError):
    pass


class DimensionMismatch(OpmodError, ValueError):
    pass


class InsufficientMoments(OpmodError, ValueError):
    pass


class InsufficientInitialMoments(OpmodError, ValueError):
    pass


class MomentsNotBandLimited(OpmodError, ValueError):
    pass


class BreakpointOutsideDomain(OpmodError, ValueError):
    pass


class NumericalFailure(OpmodError, ArithmeticError):
    """Base for failures caused by the data rather than by the call."""


class ZeroPivot(NumericalFailure):
    def __init__(self, row, message=None):
        self.row = row
        super().__init__(message or f"vanishing trailing band entry in recurrence row {row}")


class NonFiniteEntry(NumericalFailure):
    def __init__(self, m, n):
        self.m, self.n = m, n
        super().__init__(f"non-finite Gram entry at ({m}, {n})")


class NotPositiveDefinite(NumericalFailure):
    def __init__(self, step, where=None):
        self.step = step
        self.where = where
        loc = f" in {where}" if where else ""
        super().__init__(f"non-positive pivot at step {step}{loc}")


class IrreducibilityViolated(NumericalFailure):
    def __init__(self, step):
        self.step = step
        super().__init__(f"zero subdiagonal entry of the multiplication matrix at step {step}")


class RankExceedsHalfBlock(NumericalFailure):
    def __init__(self, rows, cols, rank):
        self.rows, self.cols, self.rank = rows, cols, rank
        super().__init__(f"numerical rank {rank} exceeds half of a {rows}x{cols} block")
