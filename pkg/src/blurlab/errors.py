"""Exception types shared across the package."""


class BlurlabError(Exception):
    """Base class for all package errors."""


class ConfigError(BlurlabError):
    """Invalid configuration value."""


class DimensionError(BlurlabError):
    """Array shapes incompatible with the requested operation."""


class KernelOverflowError(BlurlabError):
    """Trajectory extent does not fit in the requested kernel raster."""


class NumericError(BlurlabError):
    """Non-finite value encountered where finite input is required."""


class CorruptCheckpointError(BlurlabError):
    """Checkpoint checksum mismatch or malformed checkpoint file."""
