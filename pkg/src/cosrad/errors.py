"""Exception hierarchy shared by every module."""


class CosradError(Exception):
    """Base class for all errors raised by the package."""

    exit_status = 1


class ParameterError(CosradError, ValueError):
    pass


class ResourceLimitError(CosradError):
    exit_status = 3


class OracleUndecidableError(CosradError):
    """Subgroup membership was requested at a depth the oracle cannot decide."""


class EmptyResultError(CosradError):
    pass


class TruncationError(CosradError):
    """A truncated graph cannot deliver the exactness that was requested."""


class NonConvergenceError(CosradError):
    exit_status = 4


class ReversibilityError(CosradError, ValueError):
    pass


class ZeroConnectivityError(CosradError):
    pass


class BracketLostError(CosradError):
    pass


class ConfigError(CosradError):
    exit_status = 2

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location
