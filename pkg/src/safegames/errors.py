"""Exceptions shared across the solver and oracle modules."""


class MaxIterExceeded(RuntimeError):
    """Fixed-point iteration did not reach the tolerance within the sweep budget."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class InfeasibleGame(RuntimeError):
    """No state admits persistent safety: max_x max_u min_a of the optimal
    safety table is negative."""


class NonMemberSuccessor(RuntimeError):
    """An admissible action at a member state leads outside the member set.

    Signals a stale or inconsistent invariant set; cannot happen for sets
    extracted from a converged safety solve.
    """


class BudgetExceeded(RuntimeError):
    """Requested enumeration is larger than the configured budget."""


class NumericalFailure(RuntimeError):
    """Matrix-game solve produced a certificate gap beyond tolerance."""
