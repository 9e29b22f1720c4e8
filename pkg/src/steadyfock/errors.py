"""Exception hierarchy shared by the solvers and the scenario runner."""


class SteadyFockError(Exception):
    """Base class for library errors."""


class NoSteadyStateError(SteadyFockError, ValueError):
    """Engineered absorption at or above the natural damping (epsilon >= 1)."""


class TruncationError(SteadyFockError, ValueError):
    """The Fock-space cutoff holds too much population to be trusted."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SolverError(SteadyFockError, RuntimeError):
    """A steady-state or propagation solve failed to converge."""


class IntegrationError(SolverError):
    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t
