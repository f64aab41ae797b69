"""Exception types shared across the package."""


class DomainError(ValueError):
    """Invalid parameters or a point outside the admissible domain."""


class NoConvergence(RuntimeError):
    """An iterative evaluation hit its iteration cap before its stopping rule fired."""


class BudgetExceeded(RuntimeError):
    """A per-path random-draw budget was exhausted before the horizon."""


class OverflowGuard(RuntimeError):
    """A population count would exceed the safe integer range."""


class EmptySample(ValueError):
    """A statistic was requested from an empty sample."""
