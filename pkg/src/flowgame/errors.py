class InvalidInputError(ValueError):
    """Raised when an argument violates an operation's precondition."""


class NumericalError(ArithmeticError):
    """Raised when a density evaluation produces non-finite values."""
