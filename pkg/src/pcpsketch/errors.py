"""Exception types raised across the package."""


class PCPError(Exception):
    """Base class for every error raised by pcpsketch."""


class DimensionError(PCPError, ValueError):
    """Matrix shapes are empty, mismatched or otherwise unusable."""


class ParameterError(PCPError, ValueError):
    """A scalar parameter (k, eps, delta, s, ...) is out of range."""


class SplitIndexError(PCPError, IndexError):
    """Rank split index outside ``1 <= m <= rank``."""


class ZeroRankError(PCPError, ValueError):
    """The matrix has numerical rank zero."""


class DegenerateLambdaError(PCPError, ValueError):
    """The ridge parameter would be zero because the rank-k residual vanishes."""


class NoValidSplitError(PCPError, ValueError):
    """No index m satisfies ``sigma_m**2 >= lambda >= sigma_{m+1}**2``."""


class DegenerateDenominatorError(PCPError, ZeroDivisionError):
    """A relative error was requested against a zero reference cost."""
