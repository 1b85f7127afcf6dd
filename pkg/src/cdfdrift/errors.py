class CdfDriftError(Exception):
    """Base class for errors raised by cdfdrift."""


class ModelError(CdfDriftError, ValueError):
    """Invalid model, grid, time or initial-condition parameters."""


class SolverError(CdfDriftError, ArithmeticError):
    """A linear solve or structural invariant failed."""


class ConfigError(CdfDriftError, ValueError):
    """Bad run configuration."""
