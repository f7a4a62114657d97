"""Exception hierarchy shared by the library and the command line."""


class LGLabError(Exception):
    """Base class for all library errors."""


class NumericalError(LGLabError):
    """A numerical routine failed to reach its tolerance."""


class QuadratureNotConverged(NumericalError):
    pass


class BracketFailure(NumericalError):
    pass


class NonConvergence(NumericalError):
    pass


class CholeskyFailure(NumericalError):
    pass


class ResourceCapError(LGLabError):
    """Refused to allocate beyond the configured memory cap."""


class DimensionMismatch(LGLabError, ValueError):
    pass


class MissingQuantile(LGLabError):
    pass


class RegimeError(LGLabError, ValueError):
    """A bound was requested outside the parameter range where it is proven."""


class DomainError(LGLabError, ValueError):
    pass


class GridError(LGLabError, ValueError):
    """A tail-check grid falls outside the validity range of its bound."""
