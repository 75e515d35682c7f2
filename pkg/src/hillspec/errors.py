"""Exception types raised by the toolkit."""

from __future__ import annotations


class HillspecError(Exception):
    """Base class for all toolkit errors."""


class PeriodMismatchError(HillspecError, ValueError):
    """Two potentials have periods that are not integer multiples of each other."""


class KindMismatchError(HillspecError, ValueError):
    """Trigonometric and piecewise-constant potentials cannot be combined exactly."""


class IntegrationError(HillspecError, RuntimeError):
    """The monodromy integrator could not meet its tolerance within the step budget."""

    def __init__(self, message: str, achieved_error: float = float("nan")):
        super().__init__(message)
        self.achieved_error = achieved_error


class RefinementError(HillspecError, RuntimeError):
    """A band-edge bracket failed to shrink to the requested width."""

    def __init__(self, message: str, bracket: tuple[float, float]):
        super().__init__(message)
        self.bracket = bracket


class EmptySpectrumWindow(HillspecError, ValueError):
    """The windowed spectrum has zero measure, so the recursion cannot continue.

    This is a degenerate success: there is nothing left to shrink.
    """


class ShrinkBudgetExhausted(HillspecError, RuntimeError):
    """No candidate met the shrink target within the search budget.

    Carries the best potential found so the caller may relax the target.
    """

    def __init__(self, message: str, potential, multiple: int, delta: float):
        super().__init__(message)
        self.potential = potential
        self.multiple = multiple
        self.delta = delta
