"""Exception types shared across the package."""


class SplinegateError(Exception):
    """Base class for all package errors."""


class InvalidBasisError(SplinegateError, ValueError):
    """Spline basis cannot be constructed from the given inputs."""


class DegenerateConstraintError(SplinegateError, ValueError):
    """The zero-sum constraint is unenforceable (singular scalar)."""


class ConfigError(SplinegateError, ValueError):
    """Invalid prior or chain configuration."""


class DataError(SplinegateError, ValueError):
    """Malformed or inconsistent input data."""


class NumericalError(SplinegateError, RuntimeError):
    """Unrecoverable numerical failure inside the sampler."""
