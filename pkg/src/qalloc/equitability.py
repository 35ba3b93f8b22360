"""Knapsack-constrained equitability: exact lexicographic max-min.

The solver follows the recursive scheme: impose the partial order coming
from the upper bounds, maximize the minimum of the unfixed variables,
identify a variable pinned at that optimum, fix it, and recurse.  Stage LPs
run on an exact rational simplex, so reported values are exact Fractions.

A variable is fixed only when it is *pinned*: its maximum over the stage
region (with every unfixed variable held at or above the stage optimum)
equals the stage optimum.  Fixing an arbitrary minimizer of one optimal
vertex instead can destroy leximin optimality; a convexity argument shows
at least one unfixed variable is always pinned.

Exclusivity groups ("at most one of these may be positive") are handled by
branching over the allowed active member plus the all-zero branch, and
comparing the branch outcomes leximin-wise.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

from ._simplex import solve_lp
from .errors import DomainError, InfeasibleError

DEFAULT_NONLOCAL_CAP = Fraction(1)
DEFAULT_CONTEXTUAL_CAP = Fraction("0.9442")


def _frac(value) -> Fraction:
    if isinstance(value, float):
        return Fraction(value)
    if isinstance(value, (int, str, Rational)):
        return Fraction(value)
    raise DomainError(f"cannot interpret {value!r} as an exact number")


@dataclass(frozen=True)
class Variable:
    id: str
    lower: Fraction
    upper: Fraction

    def __post_init__(self):
        object.__setattr__(self, "id", str(self.id))
        object.__setattr__(self, "lower", _frac(self.lower))
        object.__setattr__(self, "upper", _frac(self.upper))
        if self.lower < 0:
            raise DomainError(f"variable {self.id}: lower bound must be >= 0")
        if self.upper < self.lower:
            raise DomainError(f"variable {self.id}: bounds are out of order")


@dataclass(frozen=True)
class BudgetConstraint:
    """Linear row: sum of coefficient * value over named variables <= budget."""

    coefficients: dict
    budget: Fraction

    def __post_init__(self):
        coeffs = {str(k): _frac(v) for k, v in dict(self.coefficients).items()}
        for k, v in coeffs.items():
            if v < 0:
                raise DomainError(f"coefficient of {k} must be >= 0")
        budget = _frac(self.budget)
        if budget < 0:
            raise DomainError("budget must be >= 0")
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "budget", budget)


@dataclass(frozen=True)
class KnapsackProblem:
    variables: tuple
    constraints: tuple = ()
    exclusivity_groups: tuple = ()

    def __post_init__(self):
        variables = tuple(self.variables)
        ids = [v.id for v in variables]
        if not ids:
            raise DomainError("a problem needs at least one variable")
        if len(set(ids)) != len(ids):
            raise DomainError("variable ids must be unique")
        known = set(ids)
        constraints = tuple(self.constraints)
        for c in constraints:
            unknown = set(c.coefficients) - known
            if unknown:
                raise DomainError(f"constraint references unknown ids {sorted(unknown)}")
        groups = tuple(frozenset(str(i) for i in g) for g in self.exclusivity_groups)
        for g in groups:
            if not g <= known:
                raise DomainError(f"exclusivity group references unknown ids {sorted(g - known)}")
        if len(groups) > 1:
            raise DomainError("at most one exclusivity group is supported")
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "constraints", constraints)
        object.__setattr__(self, "exclusivity_groups", groups)

    def variable(self, var_id: str) -> Variable:
        for v in self.variables:
            if v.id == var_id:
                return v
        raise DomainError(f"unknown variable id {var_id}")


@dataclass(frozen=True)
class EquitableSolution:
    """Solver output: exact values plus the per-stage audit trail.

    ``tied_solutions`` lists alternative value maps that are leximin-equal
    to ``values`` (distinct exclusivity branches scoring identically).
    """

    values: dict
    elimination_order: tuple
    stage_values: tuple
    tied_solutions: tuple = ()


def priority_order(problem: KnapsackProblem) -> list:
    """Ordered pairs (i, j) meaning value_i <= value_j, from U_i <= U_j.

    Equal upper bounds emit both directions, so equality is permitted but
    never forced; only strict-inequality pairs constrain the solver.
    """
    pairs = []
    for vi in problem.variables:
        for vj in problem.variables:
            if vi.id != vj.id and vi.upper <= vj.upper:
                pairs.append((vi.id, vj.id))
    return pairs


def _strict_pairs(problem: KnapsackProblem) -> list:
    return [(vi.id, vj.id)
            for vi in problem.variables for vj in problem.variables
            if vi.upper < vj.upper]


def _effective_lowers(problem: KnapsackProblem) -> dict:
    """Least point of the box + order region (coefficients are nonnegative)."""
    lows = {v.id: v.lower for v in problem.variables}
    pairs = _strict_pairs(problem)
    for _ in range(len(problem.variables)):
        changed = False
        for i, j in pairs:
            if lows[j] < lows[i]:
                lows[j] = lows[i]
                changed = True
        if not changed:
            break
    return lows


def _check_feasible(problem: KnapsackProblem) -> None:
    """Exact feasibility test at the least point; names the violated constraint."""
    lows = _effective_lowers(problem)
    for v in problem.variables:
        if lows[v.id] > v.upper:
            raise InfeasibleError(
                f"order constraints force {v.id} to at least {lows[v.id]}, "
                f"above its upper bound {v.upper}",
                constraint=f"bound[{v.id}]")
    for k, c in enumerate(problem.constraints):
        used = sum(coef * lows[i] for i, coef in c.coefficients.items())
        if used > c.budget:
            raise InfeasibleError(
                f"constraint {k} needs at least {used} but allows {c.budget}",
                constraint=f"constraint[{k}]")


def _solve_plain(problem: KnapsackProblem) -> EquitableSolution:
    _check_feasible(problem)
    upper = {v.id: v.upper for v in problem.variables}
    strict = _strict_pairs(problem)
    fixed: dict = {}
    remaining = [v.id for v in problem.variables]
    elimination = []
    stage_values = []

    def stage_lp(objective_id, floor):
        """Build and solve one stage LP over the remaining variables.

        With objective_id None, maximizes a fresh minimum variable t; with a
        variable id, maximizes that variable subject to every remaining
        variable held at or above ``floor``.
        """
        lows = {}
        ups = {}
        for r in remaining:
            lo = problem.variable(r).lower
            hi = upper[r]
            for i, j in strict:
                if j == r and i in fixed and fixed[i] > lo:
                    lo = fixed[i]
                if i == r and j in fixed and fixed[j] < hi:
                    hi = fixed[j]
            if floor is not None and floor > lo:
                lo = floor
            if lo > hi:
                raise InfeasibleError(
                    f"stage bounds crossed for {r}", constraint=f"bound[{r}]")
            lows[r], ups[r] = lo, hi
        with_t = objective_id is None
        cols = list(remaining) + (["__t__"] if with_t else [])
        col = {name: k for k, name in enumerate(cols)}
        rows, rhs = [], []

        def add_row(coeffs, bound):
            row = [Fraction(0)] * len(cols)
            for name, c in coeffs:
                row[col[name]] += c
            rows.append(row)
            rhs.append(bound)

        for r in remaining:
            add_row([(r, Fraction(1))], ups[r] - lows[r])
        for i, j in strict:
            if i in col and j in col:
                add_row([(i, Fraction(1)), (j, Fraction(-1))], lows[j] - lows[i])
        for c in problem.constraints:
            slack = c.budget
            slack -= sum(coef * fixed[i] for i, coef in c.coefficients.items() if i in fixed)
            slack -= sum(coef * lows[i] for i, coef in c.coefficients.items() if i in col)
            add_row([(i, coef) for i, coef in c.coefficients.items() if i in col], slack)
        if with_t:
            for r in remaining:
                add_row([("__t__", Fraction(1)), (r, Fraction(-1))], lows[r])
        objective = [Fraction(0)] * len(cols)
        objective[col["__t__"] if with_t else col[objective_id]] = Fraction(1)
        value, point = solve_lp(objective, rows, rhs)
        if with_t:
            return value
        return lows[objective_id] + point[col[objective_id]]

    while remaining:
        target = stage_lp(None, None)
        pinned = [r for r in remaining if stage_lp(r, target) == target]
        if not pinned:
            raise DomainError("no pinned variable at the stage optimum")
        # Stage tie-break: smallest upper bound first, then smallest id.
        choice = min(pinned, key=lambda r: (upper[r], r))
        fixed[choice] = target
        elimination.append(choice)
        stage_values.append(target)
        remaining.remove(choice)
    return EquitableSolution(dict(fixed), tuple(elimination), tuple(stage_values))


def _leximin_key(values: dict) -> tuple:
    return tuple(sorted(values.values()))


def lexicographic_maxmin(problem: KnapsackProblem) -> EquitableSolution:
    """Exact lexicographic max-min solution of a knapsack problem.

    Branches over any exclusivity group; leximin-tied branches are reported
    through ``tied_solutions``.
    """
    if not problem.exclusivity_groups:
        return _solve_plain(problem)
    group = problem.exclusivity_groups[0]
    members = [v.id for v in problem.variables if v.id in group]
    branches = []

    def zeroed(keep_active):
        variables = []
        for v in problem.variables:
            if v.id in group and v.id != keep_active:
                if v.lower > 0:
                    raise InfeasibleError(
                        f"{v.id} cannot be forced to zero (lower bound {v.lower})",
                        constraint=f"bound[{v.id}]")
                variables.append(Variable(v.id, Fraction(0), Fraction(0)))
            else:
                variables.append(v)
        return KnapsackProblem(tuple(variables), problem.constraints, ())

    for active in members + [None]:
        try:
            branches.append(_solve_plain(zeroed(active)))
        except InfeasibleError:
            continue
    if not branches:
        raise InfeasibleError("every exclusivity branch is infeasible")
    best_key = max(_leximin_key(b.values) for b in branches)
    winners = [b for b in branches if _leximin_key(b.values) == best_key]
    primary = winners[0]
    tied = []
    for b in winners[1:]:
        if b.values != primary.values and b.values not in tied:
            tied.append(b.values)
    return EquitableSolution(primary.values, primary.elimination_order,
                             primary.stage_values, tuple(tied))


def constraint_violation(problem: KnapsackProblem, values: dict) -> Fraction:
    """Worst violation of bounds, budget rows, strict order, exclusivity.

    Exact arithmetic; zero means feasible.  Exclusivity violation is the
    second-largest positive member value.
    """
    worst = Fraction(0)
    vals = {str(k): _frac(v) for k, v in values.items()}
    for v in problem.variables:
        worst = max(worst, v.lower - vals[v.id], vals[v.id] - v.upper)
    for c in problem.constraints:
        worst = max(worst, sum(coef * vals[i] for i, coef in c.coefficients.items()) - c.budget)
    for i, j in _strict_pairs(problem):
        worst = max(worst, vals[i] - vals[j])
    for group in problem.exclusivity_groups:
        positive = sorted((vals[i] for i in group if vals[i] > 0), reverse=True)
        if len(positive) > 1:
            worst = max(worst, positive[1])
    return worst


def monogamy_problem(committed_value, nonlocal_cap=DEFAULT_NONLOCAL_CAP,
                     contextual_cap=DEFAULT_CONTEXTUAL_CAP) -> KnapsackProblem:
    """Trade-off between a bipartite Bell share and a local contextual share.

    A correlation value already committed elsewhere eats into the joint
    budget: nonlocal + 2 * contextual <= 4 - committed_value, with box
    bounds given by the two monotone caps.
    """
    committed = _frac(committed_value)
    if not 0 <= committed < 4:
        raise DomainError("committed correlation value must lie in [0, 4)")
    cap_n, cap_c = _frac(nonlocal_cap), _frac(contextual_cap)
    if cap_n <= 0 or cap_c <= 0:
        raise DomainError("caps must be positive")
    return KnapsackProblem(
        variables=(Variable("nonlocal", Fraction(0), cap_n),
                   Variable("contextual", Fraction(0), cap_c)),
        constraints=(BudgetConstraint({"nonlocal": Fraction(1),
                                       "contextual": Fraction(2)},
                                      4 - committed),),
    )


def exclusivity_problem(gap_a, gap_b) -> KnapsackProblem:
    """Two inequality gaps of which at most one can be realized.

    Box bounds [0, gap] per variable plus one exclusivity group; the summed
    form (value_a - cap_a) + (value_b - cap_b) <= -min(...) of the source
    trade-off reduces to this at-most-one-positive structure.
    """
    ga, gb = _frac(gap_a), _frac(gap_b)
    if ga < 0 or gb < 0:
        raise DomainError("gaps must be >= 0")
    return KnapsackProblem(
        variables=(Variable("cycle_a", Fraction(0), ga),
                   Variable("cycle_b", Fraction(0), gb)),
        exclusivity_groups=(frozenset({"cycle_a", "cycle_b"}),),
    )
