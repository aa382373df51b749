"""Exception types shared across the package."""


class DhnetError(Exception):
    """Base class for package errors."""


class FormatError(DhnetError):
    """Malformed network, label, or config file."""


class ConfigError(DhnetError):
    """Invalid simulation or benchmark configuration."""


class EmptyNetworkError(DhnetError):
    """Operation requires at least one edge somewhere in the network."""
