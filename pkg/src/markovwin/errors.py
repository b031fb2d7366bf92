"""Exception types shared across the package."""

from __future__ import annotations


class InvalidModelError(ValueError):
    """A model or model file violates its invariants."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems) or "invalid model")


class ZeroLikelihoodError(ArithmeticError):
    """An observation has probability zero under every reachable state.

    The belief after such an observation is undefined, so filters raise
    instead of renormalizing a zero vector.
    """

    def __init__(self, step, symbol):
        self.step = step
        self.symbol = symbol
        super().__init__(f"symbol {symbol} at step {step} has zero likelihood")


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual):
        self.residual = residual
        super().__init__(f"{message} (residual {residual:.3e})")


class BudgetExceeded(RuntimeError):
    """An exhaustive computation would exceed its configured size budget."""

    def __init__(self, what, required, budget):
        self.what = what
        self.required = int(required)
        self.budget = int(budget)
        super().__init__(
            f"{what}: needs {self.required} enumeration cells, budget is {self.budget}"
        )
