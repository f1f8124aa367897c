"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class McbError(Exception):
    """Base class for errors raised by this package."""


class NumericalError(McbError):
    """A numerical routine could not produce a trustworthy answer."""


class ConstantColumnError(McbError, ValueError):
    def __init__(self, column: int, name: str | None = None):
        self.column = column
        self.name = name
        label = f"{column} ({name})" if name is not None else str(column)
        super().__init__(f"predictor column {label} has zero variance")


class RankDeficientError(NumericalError):
    pass


class NoConvergenceError(NumericalError):
    pass


class FoldTooSmallError(McbError, ValueError):
    pass


class ReplicateFailedError(McbError):
    def __init__(self, replicate: int, cause: BaseException | None = None):
        self.replicate = replicate
        self.cause = cause
        super().__init__(f"bootstrap replicate {replicate} failed after retries: {cause!r}")


class NotNestedError(McbError, ValueError):
    pass


class TooLargeError(McbError, ValueError):
    """Exhaustive enumeration requested beyond its feasibility limit."""


class WidthTooLargeError(TooLargeError):
    pass


class TooManyPredictorsError(TooLargeError):
    pass


class RepFailedError(McbError):
    def __init__(self, rep: int, cause: BaseException):
        self.rep = rep
        self.cause = cause
        super().__init__(f"Monte Carlo repetition {rep} failed: {cause}")


class DataFormatError(McbError, ValueError):
    """Malformed input file."""


class ConfigError(McbError, ValueError):
    """Invalid user-supplied configuration (missing column, bad flag value)."""
