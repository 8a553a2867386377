# app/exceptions.py
"""Domain errors raised by the core modules and mapped to exit codes by the CLI."""


class InputError(ValueError):
    """A document, argument or precondition is invalid."""


class NumericalDomainError(ArithmeticError):
    """A log-ratio or conditional is undefined on a positive-mass cell."""


class BudgetExceededError(RuntimeError):
    """An enumeration or state-space budget would be exceeded."""

    def __init__(self, message: str, hint: str = ""):
        super().__init__(message)
        self.hint = hint

    def __str__(self) -> str:
        base = super().__str__()
        return f"{base} ({self.hint})" if self.hint else base


class ConvergenceError(RuntimeError):
    """An iteration hit its cap; the last iterate is kept for inspection."""

    def __init__(self, message: str, last_value: float):
        super().__init__(message)
        self.last_value = last_value
