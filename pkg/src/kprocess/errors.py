"""Exception hierarchy shared by every module."""


class KProcessError(Exception):
    """Base class for errors raised by this package."""


class ParameterError(KProcessError, ValueError):
    """An argument violates the preconditions of an operation."""


class RangeError(ParameterError):
    """A time argument lies outside a trajectory's horizon."""


class DomainError(ParameterError):
    """A closed form is evaluated where it diverges."""


class BudgetError(KProcessError, RuntimeError):
    """Time attributed to truncated tail states exceeded the caller's budget.

    The realized tail time is kept on ``tail_time`` so the caller can decide
    how much finer the environment must be.
    """

    def __init__(self, tail_time, budget):
        self.tail_time = float(tail_time)
        self.budget = float(budget)
        super().__init__(
            f"tail time {self.tail_time:.6g} exceeds budget {self.budget:.6g}"
        )
