"""Exception types shared across the package."""


class DimensionMismatchError(ValueError):
    """Operands live in spaces of different dimension."""


class PreconditionerAdmissionError(ValueError):
    """Candidate preconditioner matrix failed symmetry or PSD admission."""


class SingularSystemError(RuntimeError):
    """A shifted linear system is singular or numerically near-singular."""

    def __init__(self, rcond, message=None):
        self.rcond = rcond
        if message is None:
            message = f"shifted system is near-singular (reciprocal condition estimate {rcond:.3e})"
        super().__init__(message)


class DegenerateUnsupportedError(RuntimeError):
    """Operation needs an invertible preconditioner (or a registered closed form)."""


class InnerSolveDivergedError(RuntimeError):
    """Inner iterative solve exhausted its iteration budget before reaching tolerance."""


class StepTooLargeError(ValueError):
    """Explicit integrator step exceeds the stability cap."""


class GridTooSmallError(RuntimeError):
    """Grid oracle hit its boundary; the search radius does not bracket the minimizer."""


class PathStalledError(RuntimeError):
    """Inner fixed-point iteration of the regularization path failed to converge."""

    def __init__(self, lam, partial_log=None):
        self.lam = lam
        self.partial_log = partial_log
        super().__init__(f"regularization path stalled at lambda={lam:.6g}")
