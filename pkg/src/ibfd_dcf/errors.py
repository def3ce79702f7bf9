"""Exception types shared by the models, the simulator and the CLI."""


class InvalidParameterError(ValueError):
    """A parameter is outside the domain an operation is defined on."""


class ConvergenceError(RuntimeError):
    """A fixed-point solver hit its iteration cap.

    ``residual`` is the last step size; ``trace`` holds the residual after
    every sweep so callers can tell slow convergence from oscillation.
    """

    def __init__(self, message, residual, trace=()):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual
        self.trace = tuple(trace)


class ModelInconsistencyError(ArithmeticError):
    """A closed-form expression left its valid range (e.g. a zero denominator)."""
