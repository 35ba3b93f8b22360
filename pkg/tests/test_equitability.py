"""Exact lexicographic max-min solver tests, including grid optimality."""

from fractions import Fraction

import numpy as np
import pytest

from qalloc.equitability import (BudgetConstraint, KnapsackProblem, Variable,
                                 constraint_violation, exclusivity_problem,
                                 lexicographic_maxmin, monogamy_problem,
                                 priority_order)
from qalloc.errors import DomainError, InfeasibleError


def make_problem(bounds, constraints=(), groups=()):
    """bounds: list of (id, lower, upper); constraints: list of (coeffs, budget)."""
    return KnapsackProblem(
        variables=tuple(Variable(i, lo, hi) for i, lo, hi in bounds),
        constraints=tuple(BudgetConstraint(c, b) for c, b in constraints),
        exclusivity_groups=tuple(groups))


def sorted_key(values) -> tuple:
    return tuple(sorted(float(v) for v in values.values()))


def grid_best_key(problem, pitch=Fraction(1, 1000)) -> tuple:
    """Best leximin key over the grid restricted to the feasible region."""
    ids = [v.id for v in problem.variables]
    axes = []
    for v in problem.variables:
        steps = int((v.upper - v.lower) / pitch)
        axes.append(float(v.lower) + float(pitch) * np.arange(steps + 1))
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    mask = np.ones(len(points), dtype=bool)
    col = {i: k for k, i in enumerate(ids)}
    for c in problem.constraints:
        total = np.zeros(len(points))
        for i, coef in c.coefficients.items():
            total += float(coef) * points[:, col[i]]
        mask &= total <= float(c.budget) + 1e-12
    for i, j in priority_order(problem):
        mask &= points[:, col[i]] <= points[:, col[j]] + 1e-12
    for group in problem.exclusivity_groups:
        active = np.zeros(len(points), dtype=int)
        for i in group:
            active += points[:, col[i]] > 1e-9
        mask &= active <= 1
    feasible = np.sort(points[mask], axis=1)
    assert len(feasible) > 0, "generated instance has no feasible grid point"
    order = np.lexsort(tuple(feasible[:, k] for k in range(feasible.shape[1] - 1, -1, -1)))
    return tuple(feasible[order[-1]])


def assert_key_dominates(solver_key, grid_key, slack=1e-9):
    for s, g in zip(solver_key, grid_key):
        if s > g + slack:
            return
        assert s >= g - slack, (solver_key, grid_key)


@pytest.mark.parametrize("lam,want", [
    ("2.2", Fraction(3, 5)),
    ("2.5", Fraction(1, 2)),
    ("2.8", Fraction(2, 5)),
])
def test_monogamy_solution_is_exactly_a_third_of_the_slack(lam, want):
    sol = lexicographic_maxmin(monogamy_problem(lam))
    assert sol.values == {"nonlocal": want, "contextual": want}
    assert sol.stage_values == (want, want)


def test_monogamy_large_slack_saturates_both_caps():
    sol = lexicographic_maxmin(monogamy_problem("0.5"))
    assert sol.values == {"nonlocal": Fraction(1),
                          "contextual": Fraction("0.9442")}
    assert sol.elimination_order[0] == "contextual"


def test_monogamy_rejects_commitments_at_or_above_four():
    with pytest.raises(DomainError):
        monogamy_problem(4)
    with pytest.raises(DomainError):
        monogamy_problem("4.5")


def test_zero_budget_forces_zero_values():
    problem = make_problem(
        [("x", 0, 1), ("y", 0, 1)],
        constraints=[({"x": 1, "y": 2}, 0)])
    sol = lexicographic_maxmin(problem)
    assert sol.values == {"x": Fraction(0), "y": Fraction(0)}


def test_unconstrained_problem_hits_box_upper_bounds():
    sol = lexicographic_maxmin(make_problem([("x", 0, 1), ("y", 0, 2)]))
    assert sol.values == {"x": Fraction(1), "y": Fraction(2)}
    assert sol.stage_values == (Fraction(1), Fraction(2))


@pytest.mark.parametrize("gap_a,gap_b,winner", [
    ("0.9442", "1", "cycle_b"),
    ("1", "0.9442", "cycle_a"),
])
def test_exclusivity_saturates_the_larger_gap(gap_a, gap_b, winner):
    sol = lexicographic_maxmin(exclusivity_problem(gap_a, gap_b))
    loser = "cycle_a" if winner == "cycle_b" else "cycle_b"
    assert sol.values[winner] == Fraction(1)
    assert sol.values[loser] == Fraction(0)
    assert sol.tied_solutions == ()


def test_exclusivity_reports_both_solutions_on_equal_gaps():
    sol = lexicographic_maxmin(exclusivity_problem("0.75", "0.75"))
    assert len(sol.tied_solutions) == 1
    mirror = sol.tied_solutions[0]
    assert sorted(sol.values.values()) == sorted(mirror.values())
    assert sol.values != mirror


def test_exclusivity_rejects_negative_gaps():
    with pytest.raises(DomainError):
        exclusivity_problem("-0.1", "0.5")


def test_priority_order_emits_strict_pairs_and_tie_pairs():
    problem = make_problem([("x", 0, "0.9442"), ("y", 0, 1)])
    assert priority_order(problem) == [("x", "y")]
    tied = make_problem([("x", 0, 1), ("y", 0, 1)])
    assert sorted(priority_order(tied)) == [("x", "y"), ("y", "x")]
    assert priority_order(make_problem([("x", 0, 1)])) == []


def test_stage_selection_prefers_pinned_variables():
    # Both uppers equal 1 but only y is budget-capped at 1/2.  Fixing the
    # stage value on x would cost the final (1, 1/2); the solver must not.
    problem = make_problem(
        [("x", 0, 1), ("y", 0, 1)],
        constraints=[({"y": 1}, Fraction(1, 2))])
    sol = lexicographic_maxmin(problem)
    assert sol.values == {"x": Fraction(1), "y": Fraction(1, 2)}
    assert sol.elimination_order == ("y", "x")


def test_solution_satisfies_all_constraints_exactly():
    problem = make_problem(
        [("x", Fraction(1, 10), 1), ("y", 0, "0.8"), ("z", 0, "0.8")],
        constraints=[({"x": 2, "y": 1}, "1.3"), ({"y": 1, "z": 3}, "1.9")])
    sol = lexicographic_maxmin(problem)
    assert constraint_violation(problem, sol.values) == 0


def test_constraint_violation_flags_breaches():
    problem = make_problem(
        [("x", 0, 1), ("y", 0, 1)],
        constraints=[({"x": 1, "y": 1}, 1)],
        groups=[("x", "y")])
    assert constraint_violation(problem, {"x": Fraction(2), "y": 0}) == Fraction(1)
    assert constraint_violation(
        problem, {"x": Fraction(1, 2), "y": Fraction(1, 4)}) == Fraction(1, 4)
    assert constraint_violation(problem, {"x": Fraction(1), "y": 0}) == 0


def test_infeasible_budget_names_the_constraint():
    problem = make_problem(
        [("x", Fraction(1, 2), 1), ("y", Fraction(1, 2), 1)],
        constraints=[({"x": 1, "y": 1}, Fraction(1, 2))])
    with pytest.raises(InfeasibleError) as err:
        lexicographic_maxmin(problem)
    assert err.value.constraint == "constraint[0]"


def test_infeasibility_through_order_propagation_is_detected():
    # x's lower bound flows along the order constraint into y's budget row.
    problem = make_problem(
        [("x", Fraction(1, 2), Fraction(3, 5)), ("y", 0, 1)],
        constraints=[({"y": 1}, Fraction(1, 5))])
    with pytest.raises(InfeasibleError) as err:
        lexicographic_maxmin(problem)
    assert err.value.constraint == "constraint[0]"


def test_stage_values_never_decrease():
    problem = make_problem(
        [("x", 0, "0.3"), ("y", 0, 1), ("z", 0, "0.7")],
        constraints=[({"x": 1, "y": 2, "z": 1}, "1.1")])
    sol = lexicographic_maxmin(problem)
    assert all(a <= b for a, b in zip(sol.stage_values, sol.stage_values[1:]))
    assert set(sol.elimination_order) == {"x", "y", "z"}


@pytest.mark.parametrize("numerator", range(2, 9))
def test_budget_growth_never_lowers_stage_values(numerator):
    def solve(budget):
        problem = make_problem(
            [("x", 0, 1), ("y", 0, "0.9442")],
            constraints=[({"x": 1, "y": 2}, budget)])
        return lexicographic_maxmin(problem).stage_values

    smaller = solve(Fraction(numerator, 10))
    larger = solve(Fraction(numerator + 1, 10))
    assert all(a <= b for a, b in zip(smaller, larger))


def random_instance(rng, n_vars):
    # Bounds and budgets land on the 1e-3 grid so the optimum is gridded too.
    scale = 1000 if n_vars == 2 else 100
    bounds = []
    for k in range(n_vars):
        hi = Fraction(int(rng.integers(50, scale + 1)), 1000)
        bounds.append((f"v{k}", 0, hi))
    constraints = []
    for _ in range(int(rng.integers(1, 3))):
        coeffs = {f"v{k}": int(rng.integers(0, 4)) for k in range(n_vars)}
        if all(c == 0 for c in coeffs.values()):
            coeffs[f"v{0}"] = 1
        budget = Fraction(int(rng.integers(10, scale + 1)), 1000)
        constraints.append((coeffs, budget))
    return make_problem(bounds, constraints)


@pytest.mark.parametrize("seed", range(6))
def test_two_variable_solutions_dominate_the_grid(seed):
    rng = np.random.default_rng([17, seed])
    problem = random_instance(rng, 2)
    sol = lexicographic_maxmin(problem)
    assert constraint_violation(problem, sol.values) == 0
    assert_key_dominates(sorted_key(sol.values), grid_best_key(problem))


@pytest.mark.parametrize("seed", range(3))
def test_three_variable_solutions_dominate_the_grid(seed):
    rng = np.random.default_rng([23, seed])
    problem = random_instance(rng, 3)
    sol = lexicographic_maxmin(problem)
    assert constraint_violation(problem, sol.values) == 0
    assert_key_dominates(sorted_key(sol.values), grid_best_key(problem))


def test_exclusive_instance_dominates_the_grid():
    problem = make_problem(
        [("a", 0, "0.4"), ("b", 0, "0.25")],
        constraints=[({"a": 1, "b": 1}, "0.35")],
        groups=[("a", "b")])
    sol = lexicographic_maxmin(problem)
    assert constraint_violation(problem, sol.values) == 0
    assert_key_dominates(sorted_key(sol.values), grid_best_key(problem))


def test_variable_bound_validation():
    with pytest.raises(DomainError):
        Variable("x", -1, 1)
    with pytest.raises(DomainError):
        Variable("x", 2, 1)
    with pytest.raises(DomainError):
        Variable("x", 0, object())


def test_problem_structure_validation():
    with pytest.raises(DomainError):
        make_problem([("x", 0, 1), ("x", 0, 1)])
    with pytest.raises(DomainError):
        make_problem([("x", 0, 1)], constraints=[({"ghost": 1}, 1)])
    with pytest.raises(DomainError):
        make_problem([("x", 0, 1), ("y", 0, 1)],
                     groups=[("x", "y"), ("y", "x")])
    with pytest.raises(DomainError):
        BudgetConstraint({"x": -1}, 1)
