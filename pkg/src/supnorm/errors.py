"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class SupnormError(Exception):
    """Base class for all package errors."""


class ParameterError(SupnormError, ValueError):
    """Invalid input violating an operation's preconditions."""


class UnsupportedAlgebraError(ParameterError):
    """Algebra outside the supported (indefinite, square-free) family."""


class RankError(ParameterError):
    """Proposed order basis does not span a rank-4 lattice."""


class ClosureError(ParameterError):
    """Proposed order basis is not closed under multiplication."""

    def __init__(self, message, pair=None, product=None):
        super().__init__(message)
        self.pair = pair
        self.product = product


class ResourceError(SupnormError):
    """Enumeration would exceed the configured memory budget."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class StabilizationError(SupnormError):
    """A doubling loop failed to stabilize within its round budget.

    ``partial`` carries whatever was computed before giving up and
    ``history`` the (T, value) pairs seen along the way.
    """

    def __init__(self, message, partial=None, history=None):
        super().__init__(message)
        self.partial = partial
        self.history = history or []


class InputError(SupnormError, KeyError):
    """Required sequence values are missing."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""
