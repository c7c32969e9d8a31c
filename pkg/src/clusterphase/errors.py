"""Exception types raised across the package."""


class ClusterPhaseError(Exception):
    """Base class for all package errors."""


class DomainError(ClusterPhaseError, ValueError):
    """A parameter lies outside the supported range."""


class ShapeError(ClusterPhaseError, ValueError):
    """Operands live on different index spaces."""


class PreconditionError(ClusterPhaseError, ValueError):
    """An input violates an operation's precondition."""


class NotSymmetric(ClusterPhaseError):
    """A Z-operator does not commute with every stripe symmetry."""


class NotLocal(ClusterPhaseError):
    """A Z-operator does not fit inside a small skewed square."""


class FactorizationFailed(ClusterPhaseError):
    """A ring tensor does not split into Clifford and junk parts."""


class NotInjective(ClusterPhaseError):
    """A transfer channel has a degenerate leading eigenvalue."""


class ConvergenceError(ClusterPhaseError):
    """An iteration did not converge within its budget."""


class CompilationInfeasible(ClusterPhaseError):
    """The requested accuracy is below the slicing error floor."""

    def __init__(self, message, floor=None):
        super().__init__(message)
        self.floor = floor
