"""Exception hierarchy shared by all modules.

ValidationError means the caller handed us something malformed (CLI exit 2);
NumericalError means the computation itself failed or refused (CLI exit 3).
"""


class LabError(Exception):
    pass


class ValidationError(LabError):
    pass


class NumericalError(LabError):
    pass


class ConvergenceError(NumericalError):
    """Iteration cap exceeded; carries iteration count and last residual."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class JacobianSingularError(NumericalError):
    pass
