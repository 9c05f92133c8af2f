"""Exception types raised across the package."""


class FreePlateError(Exception):
    """Base class for all errors raised by :mod:`freeplate`."""


class InvalidArgument(FreePlateError, ValueError):
    pass


class UnsupportedDomain(FreePlateError, ValueError):
    pass


class AssemblyError(FreePlateError, RuntimeError):
    pass


class InsufficientSubspace(FreePlateError, ValueError):
    """Requested more eigenpairs than the truncated trial space holds."""


class DegenerateVector(FreePlateError, ValueError):
    pass


class OutsideDomain(FreePlateError, ValueError):
    """``F(r)`` evaluated at or below its pole ``r_min``."""


class WrongBranch(FreePlateError, ValueError):
    """A tension-specific bound was called with the other sign of tension."""


class ConfigError(FreePlateError, ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
