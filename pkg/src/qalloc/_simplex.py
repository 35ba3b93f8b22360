"""Exact two-phase simplex over rationals.

Solves max c.x subject to A.x <= b, x >= 0 with Fraction arithmetic.
Dense tableau with Bland's rule (anti-cycling), adequate for the handful of
variables the stage LPs ever carry.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import InfeasibleError, QallocError

ZERO = Fraction(0)
ONE = Fraction(1)


class UnboundedError(QallocError):
    """The LP objective is unbounded above on the feasible region."""


def _pivot(tableau, basis, prow, pcol):
    pivot = tableau[prow][pcol]
    tableau[prow] = [v / pivot for v in tableau[prow]]
    for r, row in enumerate(tableau):
        if r != prow and row[pcol] != 0:
            factor = row[pcol]
            tableau[r] = [v - factor * p for v, p in zip(row, tableau[prow])]
    basis[prow] = pcol


def _run(tableau, basis, n_rows):
    """Pivot until the objective row (last) has no negative entry.

    Objective row convention: entry j holds (z_j - c_j), so column j may
    enter while its entry is negative; the stored corner value is the
    current objective.  Bland's rule: smallest eligible column, then
    smallest basis index on ratio ties.
    """
    n_cols = len(tableau[0]) - 1
    while True:
        obj = tableau[n_rows]
        pcol = next((j for j in range(n_cols) if obj[j] < 0), None)
        if pcol is None:
            return
        prow = None
        best = None
        for r in range(n_rows):
            coef = tableau[r][pcol]
            if coef > 0:
                ratio = tableau[r][-1] / coef
                if best is None or ratio < best or (ratio == best and basis[r] < basis[prow]):
                    best, prow = ratio, r
        if prow is None:
            raise UnboundedError("objective is unbounded above")
        _pivot(tableau, basis, prow, pcol)


def solve_lp(objective, rows, rhs):
    """Maximize ``objective . x`` s.t. ``rows . x <= rhs``, ``x >= 0``.

    Entries may be any Fraction-convertible numbers.  Returns
    ``(optimal_value, x)`` with exact rationals.  Raises InfeasibleError or
    UnboundedError.
    """
    objective = [Fraction(c) for c in objective]
    rows = [[Fraction(c) for c in row] for row in rows]
    rhs = [Fraction(b) for b in rhs]
    n = len(objective)
    m = len(rows)
    if any(len(row) != n for row in rows) or len(rhs) != m:
        raise QallocError("inconsistent LP dimensions")

    # slack per row; artificial for rows whose slack basis would be negative
    art_rows = [i for i in range(m) if rhs[i] < 0]
    n_art = len(art_rows)
    n_cols = n + m + n_art
    tableau = []
    basis = []
    art_col = {r: n + m + k for k, r in enumerate(art_rows)}
    for i in range(m):
        sign = -1 if rhs[i] < 0 else 1
        row = [sign * c for c in rows[i]] + [ZERO] * (m + n_art) + [sign * rhs[i]]
        row[n + i] = Fraction(sign)
        if i in art_col:
            row[art_col[i]] = ONE
            basis.append(art_col[i])
        else:
            basis.append(n + i)
        tableau.append(row)

    if n_art:
        # phase 1: maximize -(sum of artificials)
        obj = [ZERO] * n_cols + [ZERO]
        for i in art_rows:
            obj = [o - v for o, v in zip(obj, tableau[i])]
        # z_j - c_j: artificial columns carry cost -1, so add it back;
        # basic artificials then show the required zero reduced cost.
        for i in art_rows:
            obj[art_col[i]] += ONE
        tableau.append(obj)
        _run(tableau, basis, m)
        if tableau[m][-1] != 0:
            raise InfeasibleError("LP constraints admit no solution")
        tableau.pop()
        # drive any degenerate artificial out of the basis
        for r in range(m):
            if basis[r] >= n + m:
                pcol = next((j for j in range(n + m) if tableau[r][j] != 0), None)
                if pcol is not None:
                    _pivot(tableau, basis, r, pcol)
        keep = [r for r in range(m) if basis[r] < n + m]
        tableau = [[tableau[r][j] for j in range(n + m)] + [tableau[r][-1]]
                   for r in keep]
        basis = [basis[r] for r in keep]
        m = len(keep)

    obj = [-c for c in objective] + [ZERO] * (len(tableau[0]) - 1 - n) + [ZERO]
    for r in range(m):
        if basis[r] < n and obj[basis[r]] != 0:
            factor = obj[basis[r]]
            obj = [o - factor * v for o, v in zip(obj, tableau[r])]
    tableau.append(obj)
    _run(tableau, basis, m)

    x = [ZERO] * n
    for r in range(m):
        if basis[r] < n:
            x[basis[r]] = tableau[r][-1]
    return tableau[m][-1], x
