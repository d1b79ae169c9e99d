"""Exception hierarchy shared by all modules."""


class EquiabosError(Exception):
    """Base class for library errors."""


class DomainError(EquiabosError, ValueError):
    """An argument lies outside the domain of the operation."""


class ParameterError(DomainError):
    """Model or loss parameters violate their invariants.

    ``violations`` holds one message per violated field.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class SolverError(EquiabosError, RuntimeError):
    """Base class for root-finding failures."""


class BracketError(SolverError):
    """The bracket does not contain a sign change."""


class ConvergenceError(SolverError):
    """The iteration budget ran out; ``best`` is the last iterate."""

    def __init__(self, message, best=None):
        self.best = best
        super().__init__(message)


class NoSolutionError(SolverError):
    """An implicit threshold equation has no root for these inputs."""
