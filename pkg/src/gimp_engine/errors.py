class GimpError(Exception):
    """Base class for engine errors."""


class InputError(GimpError, ValueError):
    """Malformed call arguments (shapes, ranges)."""


class ConfigError(GimpError, ValueError):
    """Invalid model, lattice or run configuration."""


class ComputationError(GimpError, ArithmeticError):
    """A numerical routine failed."""


class ResourceError(GimpError, RuntimeError):
    """A size guard (atoms, internal horizon) was exceeded."""
