"""Exception types raised across the package."""


class PppError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(PppError, ValueError):
    pass


class DomainError(InvalidArgumentError):
    """An angle or physical quantity lies outside the model's domain."""


class ArcMismatchError(PppError):
    """An ambiguity was paired with an observation of a different satellite."""


class GraphStructureError(PppError):
    """Variables were added out of order or a factor references a missing key."""


class UnderConstrainedError(PppError):
    """The linear system is rank deficient.

    ``variables`` lists the keys that carry no information.
    """

    def __init__(self, variables, message=None):
        self.variables = list(variables)
        if message is None:
            message = "under-constrained variables: " + ", ".join(str(v) for v in self.variables)
        super().__init__(message)


class NonConvergenceError(PppError):
    """Gauss-Newton failed to reduce the cost; ``values`` holds the last iterate."""

    def __init__(self, message, values=None, cost=None):
        super().__init__(message)
        self.values = values
        self.cost = cost


class NumericalError(PppError):
    pass


class ConfigError(PppError, ValueError):
    pass
