"""Exception hierarchy.

Every error carries a short machine-readable ``tag`` which the command line
front end prints on stderr.
"""


class LambscatError(Exception):
    tag = "LambscatError"


class ModelValidationError(LambscatError, ValueError):
    tag = "ModelValidation"


class DuplicateEigenvalue(ModelValidationError):
    tag = "DuplicateEigenvalue"


class ZeroCoupling(ModelValidationError):
    tag = "ZeroCoupling"

    def __init__(self, indices, message=None):
        self.indices = tuple(int(i) for i in indices)
        if message is None:
            message = f"coupling vanishes at indices {list(self.indices)}"
        super().__init__(message)


class DegenerateChain(ModelValidationError):
    tag = "DegenerateChain"


class NumericalError(LambscatError, ArithmeticError):
    tag = "NumericalError"


class PoleAtZ(NumericalError):
    tag = "PoleAtZ"


class IllConditioned(NumericalError):
    tag = "IllConditioned"


class NoConvergence(NumericalError):
    tag = "NoConvergence"

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class ImaginaryAxisRoot(NumericalError):
    tag = "ImaginaryAxisRoot"


class ScanIncomplete(NumericalError):
    tag = "ScanIncomplete"


class SingularM(NumericalError):
    tag = "SingularM"


class QuadratureFailure(NumericalError):
    tag = "QuadratureFailure"


class NonFiniteState(NumericalError):
    tag = "NonFiniteState"


class OutOfRange(LambscatError, ValueError):
    tag = "OutOfRange"


class PointSpectrumPresent(LambscatError):
    tag = "PointSpectrumPresent"

    def __init__(self, eigenvalues):
        self.eigenvalues = tuple(float(e) for e in eigenvalues)
        super().__init__(f"point spectrum is not empty: {list(self.eigenvalues)}")


class InsufficientDecay(NumericalError):
    tag = "InsufficientDecay"


class RootInLeftHalfPlane(LambscatError, ValueError):
    tag = "RootInLeftHalfPlane"


class StiffWarning(UserWarning):
    """Boundary relaxation time |theta| is not resolved by the step size."""
