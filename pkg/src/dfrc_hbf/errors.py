"""Exception types raised by the solver and its subproblems."""


class DfrcHbfError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(DfrcHbfError):
    """Invalid or unknown configuration field."""


class SingularSystemError(DfrcHbfError):
    """A linear system that must be solved is rank deficient."""


class InfeasibleQoSError(DfrcHbfError):
    """The per-user rate constraint set is empty (negative ball radius)."""

    def __init__(self, message, *, value=None, k=None, u=None, iteration=None):
        super().__init__(message)
        self.value = value
        self.k = k
        self.u = u
        self.iteration = iteration


class DegenerateSubproblemError(DfrcHbfError):
    """A subproblem has no meaningful solution (e.g. zero right-hand side)."""


class ConvergenceError(DfrcHbfError):
    """A scalar root search failed to bracket or converge."""


class LinearizationPointError(DfrcHbfError):
    """The linearization point of a first-order surrogate has vanishing norm."""


class DegenerateBeampatternError(DfrcHbfError):
    """Mainlobe power is identically zero where a ratio or floor needs it."""


class NumericalFailureError(DfrcHbfError):
    """Non-finite values appeared in the iteration state."""

    def __init__(self, message, *, iteration=None):
        super().__init__(message)
        self.iteration = iteration
