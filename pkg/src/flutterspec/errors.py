"""Exception types shared across the package."""


class FlutterSpecError(Exception):
    """Base class for all flutterspec errors."""


class NumericalError(FlutterSpecError):
    """A linear-algebra kernel failed (SVD breakdown, singular Jacobian, ...)."""


class ConvergenceError(FlutterSpecError):
    """An iterative solve did not reach tolerance.

    Carries the best iterate seen so that callers (step-size control,
    diagnostics) can act on partial progress.
    """

    def __init__(self, message, best=None, iterations=0):
        super().__init__(message)
        self.best = best
        self.iterations = iterations


class DegenerateTangentError(FlutterSpecError):
    """Secant tangent requested between coincident points."""
