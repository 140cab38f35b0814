"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Array arguments have incompatible or invalid shapes."""


class SingularMatrixError(ArithmeticError):
    """A pivot fell below the singularity threshold during factorization."""


class DomainError(ValueError):
    """A scalar argument is outside its valid domain."""


class ConfigError(ValueError):
    """A configuration value is missing, unknown, or out of range."""
