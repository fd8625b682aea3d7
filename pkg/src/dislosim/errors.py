"""Exception types shared across the package."""


class DislosimError(Exception):
    """Base class for all package errors."""


class ConfigurationError(DislosimError):
    """Invalid user input: grids, shapes, kernels or scenario configs."""


class GridMismatchError(ConfigurationError):
    """Two fields that must share a grid do not."""


class NumericalError(DislosimError):
    """Runtime numerical failure (CFL violation, domain overflow, blow-up)."""


class CFLError(NumericalError):
    """Requested time step exceeds the stability limit."""


class DomainTooSmallError(NumericalError):
    """The front reached the boundary collar before the end time."""
