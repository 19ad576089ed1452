"""Exception taxonomy shared by all modules.

Input-shaped failures (bad data, violated preconditions) derive from
InputError so callers can map them to a single exit code; resource caps and
non-convergence get their own branches because they signal different remedies
(raise the cap / refine the grid vs. rerun with another seed).
"""

from __future__ import annotations


class WildHodgeError(Exception):
    """Base class for every error raised by this package."""


class InputError(WildHodgeError, ValueError):
    """Invalid data or a violated precondition detectable from the input."""


class NonSemisimpleLeading(InputError):
    """Leading polar coefficient is not diagonalizable within tolerance."""


class TruncationTooShort(InputError):
    """Formal series truncated before the pole order it must resolve."""


class RankMismatch(InputError):
    """Operation requires a specific matrix size."""


class TraceMismatch(InputError):
    """Prescribed eigenvalues and diagonal have incompatible traces."""


class GridTooCoarse(InputError):
    """Grid resolution below the minimum the operation can use."""


class NonRegularLeading(InputError):
    """Leading Higgs coefficient has repeated diagonal entries."""


class ResonantWeight(InputError):
    """delta - Re(lambda) too close to an integer for the twisted solver."""


class NegativeDim(InputError):
    """Dimension formula evaluated outside its intended regime."""


class BudgetExceeded(WildHodgeError):
    """Enumeration would exceed the configured cap."""

    def __init__(self, required: int, cap: int):
        self.required = required
        self.cap = cap
        super().__init__(f"enumeration needs {required} subsums, cap is {cap}")


class OscillationUnresolved(WildHodgeError):
    """Conjugator phase varies more than pi/4 across some grid cell."""


class NoConvergence(WildHodgeError):
    """Iterative solve failed after all restarts; best residual attached."""

    def __init__(self, best_residual: float, message: str = ""):
        self.best_residual = best_residual
        super().__init__(message or f"no restart converged; best residual {best_residual:.3e}")


class NoContraction(WildHodgeError):
    """Fixed-point map stayed expansive down to the smallest usable disk."""


class NonIntegerDegree(UserWarning):
    """Residue traces do not sum to an integer; input data is inconsistent."""
