"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of the operation."""


class BudgetError(RuntimeError):
    """The requested exact computation exceeds the configured work budget."""


class EmptyWindowError(RuntimeError):
    """No graph at this n has edge density inside the requested window."""


class NonConvergenceError(RuntimeError):
    """An iterative routine failed to converge within its sweep budget."""
