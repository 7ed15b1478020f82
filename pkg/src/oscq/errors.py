"""Exception taxonomy shared across the package.

The CLI maps these onto its exit-code contract: rejected input -> 2,
numerical failure -> 3, internal invariant violation -> 4.
"""


class OscqError(Exception):
    """Base class for all package errors."""


class InputError(OscqError, ValueError):
    """Rejected input: bad parameters, out-of-domain values, malformed text."""


class DimensionMismatchError(InputError):
    """Operands defined over different numbers of degrees of freedom."""


class NumericalError(OscqError, RuntimeError):
    """A computation failed numerically (as opposed to being fed bad input)."""


class SingularApproachError(NumericalError):
    """Trajectory entered the guard band around a domain singularity."""

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class StepSizeUnderflowError(NumericalError):
    """Adaptive integrator drove the step size below representable resolution."""


class FiniteTimeEscapeError(NumericalError):
    """State magnitude exceeded the blow-up threshold at a finite time."""

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class PeriodNotFoundError(NumericalError):
    """No phase-space return was detected: aperiodic motion or window too short."""


class SolverConvergenceError(NumericalError):
    """An iterative solver (eigensolver, nonlinear step solver) did not converge."""


class InvariantViolationError(OscqError):
    """An internal consistency check failed; indicates a bug, not bad input."""
