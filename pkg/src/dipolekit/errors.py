"""Exception types shared across the package."""


class DipoleKitError(Exception):
    """Base class for all dipolekit errors."""


class ValidationError(DipoleKitError, ValueError):
    """Bad input: geometry, vectors, node counts, configuration."""


class ImageCoincidenceError(ValidationError):
    """Separation vector falls (numerically) on a lattice translation."""


class ResonanceError(DipoleKitError):
    """A field mode sits too close to the transition frequency.

    Carries the offending mode so callers can report it.
    """

    def __init__(self, message, n=None, omega_k=None, detuning=None):
        super().__init__(message)
        self.n = n
        self.omega_k = omega_k
        self.detuning = detuning


class ConvergenceError(DipoleKitError, RuntimeError):
    """A regulated sum or extrapolation failed to meet the requested tolerance.

    ``series`` holds the sequence of partial results (shell values or
    regulator-schedule values) that failed to converge.
    """

    def __init__(self, message, series=None, residual=None, tol=None):
        super().__init__(message)
        self.series = list(series) if series is not None else []
        self.residual = residual
        self.tol = tol
