"""Exception hierarchy shared by every module."""


class ArgmaxLabError(Exception):
    """Base class for all errors raised by argmaxlab."""


class DomainError(ArgmaxLabError, ValueError):
    """A point, grid or drift lies outside the domain it is evaluated on."""


class KernelInvalidError(ArgmaxLabError):
    """A covariance matrix is not positive semidefinite within tolerance."""


class ConfigurationError(ArgmaxLabError, ValueError):
    """An experiment or model configuration violates a required hypothesis."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class DegenerateAnchorError(ConfigurationError):
    """A conditioning pivot R_{k-1}(t^k, t^k) vanished."""
