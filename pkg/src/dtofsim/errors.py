"""Exception types shared across the toolkit."""


class ConfigError(ValueError):
    """A parameter or scenario file violates its documented constraints."""


class SolverError(RuntimeError):
    """A numerical solve could not produce a valid result."""


class NoDetectionError(SolverError):
    """The trigger SNR is already below the threshold at the minimum range."""


class UnboundedRangeError(SolverError):
    """The trigger SNR stays above the threshold out to the search cap."""


class SipmSaturationError(SolverError):
    """Background plus dark counts occupy the entire SPAD array."""
