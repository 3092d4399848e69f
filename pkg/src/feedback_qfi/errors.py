"""Exception hierarchy. The CLI maps every ``QfiError`` to exit code 1."""


class QfiError(Exception):
    """Base class for numerical and domain failures."""


class ConvergenceError(QfiError):
    """Jacobi iteration hit its sweep cap."""

    def __init__(self, residual: float, sweeps: int):
        super().__init__(
            f"Hermitian eigensolver did not converge after {sweeps} sweeps "
            f"(off-diagonal residual {residual:.3e})"
        )
        self.residual = residual
        self.sweeps = sweeps


class InvalidMatrixError(QfiError, ValueError):
    """Matrix violates a structural invariant (shape, Hermiticity, finiteness)."""


class NotUnitaryError(InvalidMatrixError):
    pass


class InvalidStateError(InvalidMatrixError):
    """Not a density matrix (trace, Hermiticity or positivity)."""


class ValidityError(QfiError):
    """Eigen-angle spread exceeds pi, outside the min-fidelity formula's domain."""


class StepTooLargeError(QfiError):
    pass


class DerivativeInaccurateError(QfiError):
    pass


class NoInformationError(QfiError):
    pass


class InconsistentDerivativeError(QfiError, ValueError):
    pass


class UnsupportedDimensionError(QfiError, ValueError):
    pass
