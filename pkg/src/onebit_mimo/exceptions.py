"""Exception types shared across the package."""


class OneBitMimoError(Exception):
    """Base class for every error raised by this package."""


class SingularMatrixError(OneBitMimoError, ValueError):
    """Raised when a linear solve meets a numerically singular matrix.

    Attributes
    ----------
    dimension : int or None
        Size of the square system that failed.
    """

    def __init__(self, message, dimension=None):
        super().__init__(message)
        self.dimension = dimension


class RankDeficiencyError(OneBitMimoError, ValueError):
    """Raised when a matrix handed to the pseudoinverse is rank deficient."""


class InsufficientPilotsError(OneBitMimoError, ValueError):
    """Raised when a pilot block is too short for the requested fit."""


class DegenerateChannelError(OneBitMimoError, ValueError):
    """Raised when a channel estimate contains an all-zero user column."""


class ComplexityCapError(OneBitMimoError, ValueError):
    """Raised when a grid search would exceed its candidate budget."""


class SizeCapError(OneBitMimoError, ValueError):
    """Raised when exact enumeration would exceed its state budget."""


class GridCoverageError(OneBitMimoError, ValueError):
    """Raised when a discretization grid does not cover the model mass."""


class InvalidPmfError(OneBitMimoError, ValueError):
    """Raised when a probability vector is negative or does not sum to one."""


class UnsupportedCombinationError(OneBitMimoError, ValueError):
    """Raised when option values are individually valid but incompatible."""


class ConfigError(OneBitMimoError, ValueError):
    """Raised on malformed run configuration text.

    Attributes
    ----------
    key : str or None
        Offending configuration key, when known.
    line : int or None
        1-based line number in the source text, when known.
    """

    def __init__(self, message, key=None, line=None):
        super().__init__(message)
        self.key = key
        self.line = line
