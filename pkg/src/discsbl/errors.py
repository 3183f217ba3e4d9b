class InvalidArgument(ValueError):
    """Raised for malformed inputs (bad sizes, out-of-range parameters)."""


class NotPSDError(InvalidArgument):
    """A matrix expected to be positive semidefinite has a clearly negative eigenvalue."""


class NumericalFailure(ArithmeticError):
    """A solver produced non-finite or otherwise invalid intermediate values.

    ``iteration`` is the (1-based) outer iteration at which the failure was
    detected, or ``None`` when it happened during initialization.
    """

    def __init__(self, message, iteration=None):
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)
        self.iteration = iteration
