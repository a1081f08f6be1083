"""Exception types shared across the library."""


class InputError(ValueError):
    """User-supplied data violates a documented precondition."""


class NumericalError(ArithmeticError):
    """A linear-algebra step could not be completed reliably."""


class PreconditionError(ValueError):
    """The hypothesis of an identity is violated by the arguments."""


class UnsupportedOperationError(NotImplementedError):
    """The operation is not defined for the given kernel family."""
