"""Exception types shared across the package."""


class PmnoError(Exception):
    pass


class ConfigError(PmnoError, ValueError):
    """Bad configuration value: unknown name, unsupported extent, bad order."""


class ShapeError(PmnoError, ValueError):
    """Operand extents or layouts do not match."""


class ContractError(PmnoError, ValueError):
    """A precondition of an operation was violated by the caller."""


class NumericalAbort(PmnoError, RuntimeError):
    """A computation produced non-finite or runaway values."""
