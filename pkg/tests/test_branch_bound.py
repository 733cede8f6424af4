import itertools
import math
import random

import pytest

from mixedfleet.milp.branch_bound import (
    WarmStartError,
    lp_relax_solve,
    solve,
)
from mixedfleet.milp.problem import (
    BINARY,
    CONTINUOUS,
    STATUS_FEASIBLE,
    STATUS_INFEASIBLE,
    STATUS_NO_SOLUTION,
    STATUS_OPTIMAL,
    STATUS_UNBOUNDED,
    MilpProblem,
    SolveConfig,
    check_point,
)


def knapsack(values, weights, capacity) -> MilpProblem:
    p = MilpProblem(name="knapsack")
    for i in range(len(values)):
        p.add_var(("x", i), f"x{i}", 0.0, 1.0, BINARY)
    p.add_constraint("cap", [(i, w) for i, w in enumerate(weights)], "<=",
                     capacity)
    p.set_objective("max", {i: v for i, v in enumerate(values)})
    return p


def brute_knapsack(values, weights, capacity):
    best = 0.0
    for mask in itertools.product([0, 1], repeat=len(values)):
        if sum(m * w for m, w in zip(mask, weights)) <= capacity + 1e-9:
            best = max(best, sum(m * v for m, v in zip(mask, values)))
    return best


class TestLpOnly:
    def test_pure_lp_is_one_node(self):
        p = MilpProblem(name="lp")
        p.add_var(("x",), "x", 0.0, math.inf, CONTINUOUS)
        p.add_constraint("c", [(0, 1.0)], "<=", 3.0)
        p.set_objective("max", {0: 1.0})
        sol = solve(p)
        assert sol.status == STATUS_OPTIMAL
        assert sol.objective == pytest.approx(3.0)
        assert sol.nodes_explored == 1

    def test_lp_relax_examples(self):
        p = MilpProblem(name="relax")
        p.add_var(("x",), "x", 0.0, math.inf, CONTINUOUS)
        p.add_constraint("c", [(0, 1.0)], "<=", 3.0)
        p.set_objective("max", {0: 1.0})
        out = lp_relax_solve(p)
        assert out.status == "optimal"
        assert out.objective == pytest.approx(3.0)

    def test_relaxation_bounds_the_integer_optimum(self):
        values, weights, cap = [5.0, 4.0, 3.0], [4.0, 3.0, 2.0], 6.0
        p = knapsack(values, weights, cap)
        relax = lp_relax_solve(p)
        sol = solve(p)
        assert sol.status == STATUS_OPTIMAL
        # max problem: relaxation is an upper bound
        assert relax.objective >= sol.objective - 1e-9

    def test_empty_objective(self):
        p = MilpProblem(name="empty")
        p.add_var(("x",), "x", 0.0, 2.0, CONTINUOUS)
        p.add_constraint("c", [(0, 1.0)], ">=", 1.0)
        out = lp_relax_solve(p)
        assert out.status == "optimal"
        assert out.objective == 0.0


class TestIntegerSolves:
    @pytest.mark.parametrize("seed", range(15))
    def test_knapsacks_match_brute_force(self, seed):
        rng = random.Random(seed)
        n = rng.randint(3, 9)
        values = [rng.uniform(1, 10) for _ in range(n)]
        weights = [rng.uniform(1, 6) for _ in range(n)]
        cap = sum(weights) * rng.uniform(0.3, 0.8)
        sol = solve(knapsack(values, weights, cap))
        assert sol.status == STATUS_OPTIMAL
        assert sol.objective == pytest.approx(
            brute_knapsack(values, weights, cap), abs=1e-6)
        assert sol.rel_gap <= 0.001 + 1e-12

    def test_infeasible_integer_problem(self):
        p = MilpProblem(name="infeasible")
        p.add_var(("x",), "x", 0.0, 1.0, BINARY)
        p.add_var(("y",), "y", 0.0, 1.0, BINARY)
        p.add_constraint("c1", [(0, 1.0), (1, 1.0)], ">=", 3.0)
        p.set_objective("min", {0: 1.0})
        assert solve(p).status == STATUS_INFEASIBLE

    def test_unbounded_problem(self):
        p = MilpProblem(name="unbounded")
        p.add_var(("x",), "x", 0.0, math.inf, CONTINUOUS)
        p.set_objective("max", {0: 1.0})
        p.add_constraint("c", [(0, -1.0)], "<=", 0.0)
        assert solve(p).status == STATUS_UNBOUNDED

    def test_bound_sandwich_and_gap_contract(self):
        values = [7.0, 6.0, 5.0, 4.5, 3.0]
        weights = [5.0, 4.0, 3.5, 3.0, 2.0]
        p = knapsack(values, weights, 9.0)
        sol = solve(p)
        true_opt = brute_knapsack(values, weights, 9.0)
        assert sol.status == STATUS_OPTIMAL
        # max problem: objective <= true optimum <= bound
        assert sol.objective == pytest.approx(true_opt, abs=1e-6)
        assert sol.best_bound >= sol.objective - 1e-6
        assert sol.rel_gap <= 0.001 + 1e-12

    def test_node_limit_returns_no_solution_or_incumbent(self):
        values = [1.0 + 0.01 * i for i in range(12)]
        weights = [1.0 + 0.07 * i for i in range(12)]
        p = knapsack(values, weights, 6.0)
        sol = solve(p, SolveConfig(node_limit=1))
        assert sol.status in (STATUS_FEASIBLE, STATUS_NO_SOLUTION,
                              STATUS_OPTIMAL)


class TestWarmStart:
    def test_warm_start_installed_and_dominates(self):
        values = [6.0, 5.0, 4.0, 3.0]
        weights = [4.0, 3.0, 2.5, 2.0]
        p = knapsack(values, weights, 6.0)
        warm = {("x", 0): 0.0, ("x", 1): 1.0, ("x", 2): 1.0, ("x", 3): 0.0}
        cold = solve(p, SolveConfig(node_limit=1))
        warm_sol = solve(p, SolveConfig(node_limit=1), warm)
        if cold.has_solution:
            assert warm_sol.objective >= cold.objective - 1e-9  # max sense
        else:
            assert warm_sol.has_solution

    def test_violating_warm_start_rejected_with_constraint_name(self):
        p = knapsack([1.0, 1.0], [3.0, 3.0], 4.0)
        with pytest.raises(WarmStartError, match="cap"):
            solve(p, warm_start={("x", 0): 1.0, ("x", 1): 1.0})

    def test_fractional_warm_start_rejected(self):
        p = knapsack([1.0], [1.0], 1.0)
        with pytest.raises(WarmStartError, match="integrality"):
            solve(p, warm_start={("x", 0): 0.5})


class TestDeterminism:
    def test_identical_runs_bit_identical(self):
        rng = random.Random(42)
        values = [rng.uniform(1, 9) for _ in range(10)]
        weights = [rng.uniform(1, 5) for _ in range(10)]
        p = knapsack(values, weights, 14.0)
        runs = [solve(p, SolveConfig(node_limit=200)) for _ in range(3)]
        assert len({r.status for r in runs}) == 1
        assert len({r.objective for r in runs}) == 1
        assert len({r.nodes_explored for r in runs}) == 1
        assert len({r.values for r in runs}) == 1


class TestCheckPoint:
    def test_optimal_point_is_clean(self):
        p = knapsack([5.0, 4.0], [3.0, 2.0], 4.0)
        sol = solve(p)
        assert check_point(p, sol.values) == []

    def test_violations_are_named(self):
        p = MilpProblem(name="named")
        p.add_var(("x",), "x", 0.0, 1.0, BINARY)
        p.add_constraint("cover[b1]", [(0, 1.0)], "=", 1.0)
        p.set_objective("min", {0: 1.0})
        bad = check_point(p, [0.0])
        assert len(bad) == 1 and "cover[b1]" in bad[0]

    def test_all_zero_point_violates_every_cover_row(self):
        p = MilpProblem(name="covers")
        for i in range(5):
            p.add_var(("x", i), f"x{i}", 0.0, 1.0, BINARY)
            p.add_constraint(f"cover[{i}]", [(i, 1.0)], "=", 1.0)
        p.set_objective("min", {})
        assert len(check_point(p, [0.0] * 5)) == 5

    def test_bound_violations_reported(self):
        p = MilpProblem(name="bounds")
        p.add_var(("x",), "x", 0.0, 1.0, CONTINUOUS)
        p.set_objective("min", {})
        assert any("bound" in v for v in check_point(p, [2.0]))
