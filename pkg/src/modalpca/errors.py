"""Exception hierarchy shared by every module."""


class ModalPCAError(Exception):
    """Base class for all errors raised by modalpca."""


class InvalidArgumentError(ModalPCAError, ValueError):
    pass


class DegenerateSampleError(ModalPCAError, ValueError):
    """The sample carries no spread (too few points, all values identical...)."""


class DimensionError(ModalPCAError, ValueError):
    pass


class InvalidFrameError(ModalPCAError, ValueError):
    """Chart center and constraints are not mutually orthonormal."""


class ChartSingularityError(ModalPCAError, ValueError):
    """Point is (numerically) the excluded antipode of the chart center."""


class InvalidPointError(ModalPCAError, ValueError):
    pass


class OptimizationError(ModalPCAError, ArithmeticError):
    """Raised when an inner optimizer produces non-finite values.

    The best iterate seen so far is kept in ``best``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class SingularSystemError(ModalPCAError, ArithmeticError):
    pass


class InvalidBasisError(ModalPCAError, ValueError):
    pass


class ConfigError(ModalPCAError, ValueError):
    pass


class ParseError(ModalPCAError, ValueError):
    """Malformed CSV cell; ``row`` and ``column`` are 1-based."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class StructureError(ModalPCAError, ValueError):
    pass


class FormatError(ModalPCAError, ValueError):
    pass
