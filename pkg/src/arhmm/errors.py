"""Exception hierarchy.

The CLI maps :class:`DataError` to exit code 2 and :class:`NumericalError`
to exit code 3.
"""


class ArhmmError(Exception):
    pass


class DataError(ArhmmError, ValueError):
    """Malformed input data, files or model documents."""


class SchemaError(DataError):
    pass


class WindowError(DataError):
    """A time index or series is too short for the model's maximum lag."""


class NumericalError(ArhmmError, ArithmeticError):
    pass


class SingularSystemError(NumericalError):
    pass


class DecodingError(NumericalError):
    def __init__(self, t, message=None):
        self.t = t
        super().__init__(message or f"all states have zero probability at t={t}")


class UnitRootError(NumericalError):
    def __init__(self, state, var):
        self.state = state
        self.var = var
        super().__init__(
            f"state {state}, variable {var}: AR coefficients sum to 1, stationary mean undefined"
        )
