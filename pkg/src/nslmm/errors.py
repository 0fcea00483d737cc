"""Exception types shared across the package."""


class NslmmError(Exception):
    """Base class for package-specific failures."""


class ConfigurationError(NslmmError):
    """A run or experiment was configured inconsistently."""


class UnsupportedError(NslmmError):
    """The requested quantity is not defined for this object."""
