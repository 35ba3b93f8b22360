"""Exception types shared across the package.

The CLI maps these onto exit codes, so library code should raise the most
specific type that applies rather than bare ValueError/RuntimeError.
"""

from __future__ import annotations


class QallocError(Exception):
    """Base class for all package-specific errors."""


class DomainError(QallocError, ValueError):
    """Input outside the mathematical domain of an operation.

    Covers invalid dimensions, priors outside [0, 1], nonpositive values fed
    to logarithms, malformed bounds and parameters.
    """


class ShapeError(DomainError):
    """Array or object shapes do not line up."""


class InfeasibleError(QallocError):
    """A constraint system admits no solution.

    ``constraint`` names the violated constraint when one can be identified.
    """

    def __init__(self, message: str, constraint: str | None = None):
        super().__init__(message)
        self.constraint = constraint


class CapExceededError(QallocError):
    """A size or search cap was hit before the computation could finish."""


class IndeterminateError(QallocError):
    """An iterative solve stopped in the gray zone between verdicts.

    Raised when the iteration cap is reached with a residual too small to
    declare infeasibility and too large to certify feasibility.
    """
