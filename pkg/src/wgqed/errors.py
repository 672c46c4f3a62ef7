"""Exception types raised by the simulator."""


class WgqedError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(WgqedError, ValueError):
    pass


class UnsupportedGeometryError(WgqedError, ValueError):
    """The chain layout does not support the requested operation."""


class NumericalFailureError(WgqedError, ArithmeticError):
    """Non-finite values or a breakdown of a numerical routine."""


class LinearSolveError(NumericalFailureError):
    pass


class IntegrationError(NumericalFailureError):
    """Fixed-step integration became unstable (norm grew)."""


class UndefinedDarkStateError(WgqedError, ValueError):
    pass


class NoSplittingError(WgqedError):
    """A spectrum has fewer than two resolvable maxima."""
