"""Exception hierarchy shared by every phdae module."""


class PHDAEError(Exception):
    """Base class for all errors raised by phdae."""


class EvaluationError(PHDAEError):
    """A model callback produced a non-finite or malformed value."""


class AssumptionViolation(PHDAEError):
    """The rank / convexity conditions needed for unique multipliers fail."""


class UnsupportedOperation(PHDAEError):
    """The requested operation needs structure the system does not declare."""


class SolverError(PHDAEError):
    """An iterative solve did not converge.

    Attributes
    ----------
    residual : float
        Infinity norm of the last residual seen by the solver.
    iterations : int
        Number of iterations performed before giving up.
    """

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class StepFailure(SolverError):
    """A constrained step failed; carries the step index and partial trajectory."""

    def __init__(self, message, residual=float("nan"), iterations=0, step_index=None,
                 trajectory=None):
        super().__init__(message, residual, iterations)
        self.step_index = step_index
        self.trajectory = trajectory


class InputError(PHDAEError):
    """Bad user input, e.g. an initial state that is not on the constraint manifold."""


class ConfigError(PHDAEError):
    """Malformed run configuration; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
