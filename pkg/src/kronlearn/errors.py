"""Exception types shared across the package."""


class KronlearnError(Exception):
    """Base class for all package errors."""


class DimensionError(KronlearnError, ValueError):
    """Operands have incompatible shapes."""


class SizeError(DimensionError):
    """A product would exceed the supported element count."""


class ArityError(DimensionError):
    """Wrong number of factors for the tensor order."""


class ConvergenceError(KronlearnError, RuntimeError):
    """An iterative routine hit its iteration cap."""


class PreconditionError(KronlearnError, ValueError):
    """An input violates a documented precondition."""


class PackingError(KronlearnError, RuntimeError):
    """Rejection sampling could not build the requested packing class."""


class CombinatorialError(KronlearnError, ValueError):
    """Support enumeration exceeds the configured guard."""


class ConfigError(KronlearnError, ValueError):
    """Invalid experiment configuration."""
