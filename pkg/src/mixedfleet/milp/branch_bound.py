"""Branch-and-bound over an LP relaxation.

Node selection is best-bound (FIFO on ties); after every new incumbent
the search plunges depth-first through the most recently created children
until that stack empties.  Branching picks the most fractional integer
variable, ties broken by lowest column index.  Relaxations are solved by
the built-in dense simplex or, above a size threshold (or on request), by
scipy's sparse LP solver.  Everything is deterministic for a fixed
problem, configuration and warm start.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .problem import (
    EQ,
    GE,
    LE,
    STATUS_FEASIBLE,
    STATUS_INFEASIBLE,
    STATUS_NO_SOLUTION,
    STATUS_OPTIMAL,
    STATUS_UNBOUNDED,
    MilpProblem,
    MilpSolution,
    SolveConfig,
    check_point,
    relative_gap,
)
from .simplex import (
    LP_INFEASIBLE,
    LP_OPTIMAL,
    LP_UNBOUNDED,
    LpOutcome,
    LpSizeError,
    simplex_solve,
)


class WarmStartError(ValueError):
    """A warm start violated the problem it was offered to."""


@dataclass(frozen=True)
class LpRelaxResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    objective: float
    values: Optional[tuple[float, ...]]


def _dense_arrays(problem: MilpProblem):
    n = problem.num_vars
    m = problem.num_constraints
    a = np.zeros((m, n))
    b = np.zeros(m)
    senses = []
    for i, con in enumerate(problem.constraints):
        for col, coef in con.terms:
            a[i, col] = coef
        b[i] = con.rhs
        senses.append(con.sense)
    lower = np.array([v.lower for v in problem.variables])
    upper = np.array([v.upper for v in problem.variables])
    return a, senses, b, lower, upper


def _objective_vector(problem: MilpProblem) -> np.ndarray:
    c = np.zeros(problem.num_vars)
    for col, coef in problem.objective.items():
        c[col] = coef
    if problem.objective_sense == "max":
        c = -c
    return c


class _LpEngine:
    """Solves the LP relaxation under per-node bounds."""

    def __init__(self, problem: MilpProblem, config: SolveConfig):
        self.config = config
        self.n = problem.num_vars
        m = problem.num_constraints
        self.c_min = _objective_vector(problem)
        backend = config.lp_backend
        if backend == "auto":
            # worst case the dense tableau adds one slack and one
            # artificial column per row
            cells = (m + 2) * (self.n + 2 * m + 1)
            backend = "embedded" if cells <= config.max_dense_cells else "scipy"
        self.backend = backend
        if backend == "embedded":
            cells = (m + 2) * (self.n + 2 * m + 1)
            if cells > 4 * config.max_dense_cells:
                raise LpSizeError(
                    f"problem needs ~{cells} tableau cells; raise "
                    f"max_dense_cells or use the scipy backend")
            (self.a, self.senses, self.b,
             self.lower, self.upper) = _dense_arrays(problem)
        else:
            self._build_sparse(problem)

    def _build_sparse(self, problem: MilpProblem) -> None:
        from scipy import sparse

        ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
        for con in problem.constraints:
            if con.sense == EQ:
                eq_rows.append(con)
                eq_rhs.append(con.rhs)
            elif con.sense == LE:
                ub_rows.append((con, 1.0))
                ub_rhs.append(con.rhs)
            elif con.sense == GE:
                ub_rows.append((con, -1.0))
                ub_rhs.append(-con.rhs)

        def matrix(rows):
            data, ri, ci = [], [], []
            for r, payload in enumerate(rows):
                if isinstance(payload, tuple):
                    con, sign = payload
                else:
                    con, sign = payload, 1.0
                for col, coef in con.terms:
                    data.append(sign * coef)
                    ri.append(r)
                    ci.append(col)
            return sparse.csr_matrix(
                (data, (ri, ci)), shape=(len(rows), self.n))

        self.a_ub = matrix(ub_rows) if ub_rows else None
        self.b_ub = np.array(ub_rhs) if ub_rows else None
        self.a_eq = matrix(eq_rows) if eq_rows else None
        self.b_eq = np.array(eq_rhs) if eq_rows else None
        self.lower = np.array([v.lower for v in problem.variables])
        self.upper = np.array([v.upper for v in problem.variables])

    def solve(self, lower: np.ndarray, upper: np.ndarray) -> LpOutcome:
        if self.backend == "embedded":
            return simplex_solve(
                self.c_min, self.a, self.senses, self.b, lower, upper,
                feas_tol=self.config.lp_feas_tol,
                max_cells=self.config.max_dense_cells * 4,
            )
        from scipy.optimize import linprog

        res = linprog(
            self.c_min, A_ub=self.a_ub, b_ub=self.b_ub,
            A_eq=self.a_eq, b_eq=self.b_eq,
            bounds=np.column_stack([lower, upper]),
            method="highs",
        )
        if res.status == 0:
            return LpOutcome(LP_OPTIMAL, res.x, float(res.fun), int(res.nit))
        if res.status == 2:
            return LpOutcome(LP_INFEASIBLE, None, math.inf, int(res.nit))
        if res.status == 3:
            return LpOutcome(LP_UNBOUNDED, None, -math.inf, int(res.nit))
        return LpOutcome("iteration_limit", None, math.nan, int(res.nit))


def _trivial_bound(c_min: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> float:
    # valid lower bound for the minimized objective using box bounds only
    total = 0.0
    for j in range(len(c_min)):
        if c_min[j] == 0.0:
            continue
        candidate = c_min[j] * (lower[j] if c_min[j] > 0 else upper[j])
        if math.isinf(candidate) or math.isnan(candidate):
            return -math.inf
        total += candidate
    return total


def coerce_values(
    problem: MilpProblem,
    values: Union[Mapping, Sequence[float]],
) -> np.ndarray:
    """Accept a full vector or a mapping keyed by column or semantic key."""
    n = problem.num_vars
    if isinstance(values, Mapping):
        out = np.full(n, math.nan)
        for key, val in values.items():
            col = key if isinstance(key, int) else problem.col(key)
            out[col] = float(val)
        missing = np.nonzero(np.isnan(out))[0]
        if len(missing):
            name = problem.variables[missing[0]].name
            raise ValueError(f"warm start missing value for variable {name}")
        return out
    out = np.asarray(values, dtype=float)
    if len(out) != n:
        raise ValueError(f"expected {n} values, got {len(out)}")
    return out


def lp_relax_solve(problem: MilpProblem,
                   config: Optional[SolveConfig] = None) -> LpRelaxResult:
    """Solve the problem with integrality dropped; objective in the
    problem's own sense."""
    config = config or SolveConfig()
    engine = _LpEngine(problem, config)
    out = engine.solve(engine.lower.copy(), engine.upper.copy())
    sign = -1.0 if problem.objective_sense == "max" else 1.0
    if out.status == LP_OPTIMAL:
        return LpRelaxResult("optimal", sign * out.objective,
                             tuple(float(v) for v in out.x))
    if out.status == LP_INFEASIBLE:
        return LpRelaxResult("infeasible", math.nan, None)
    if out.status == LP_UNBOUNDED:
        return LpRelaxResult("unbounded", math.nan, None)
    raise RuntimeError(f"LP relaxation failed: {out.status}")


def solve(
    problem: MilpProblem,
    config: Optional[SolveConfig] = None,
    warm_start: Optional[Union[Mapping, Sequence[float]]] = None,
) -> MilpSolution:
    """Branch-and-bound solve of a :class:`MilpProblem`."""
    config = config or SolveConfig()
    t0 = time.perf_counter()
    sign = -1.0 if problem.objective_sense == "max" else 1.0
    int_cols = problem.integer_columns()
    int_tol = config.integrality_tol

    incumbent: Optional[np.ndarray] = None
    incumbent_obj = math.inf  # minimized sense

    if warm_start is not None:
        vec = coerce_values(problem, warm_start)
        bad = check_point(problem, vec, feas_tol=config.lp_feas_tol * 10,
                          check_integrality=True, integrality_tol=int_tol)
        if bad:
            raise WarmStartError(f"warm start violates constraint: {bad[0]}")
        incumbent = vec
        incumbent_obj = sign * problem.objective_value(vec)

    c_min = _objective_vector(problem)
    base_lower = np.array([v.lower for v in problem.variables])
    base_upper = np.array([v.upper for v in problem.variables])
    fallback_bound = _trivial_bound(c_min, base_lower, base_upper)

    def finish(status: str, nodes: int, bound: float) -> MilpSolution:
        seconds = time.perf_counter() - t0
        if incumbent is None:
            return MilpSolution(
                status=status, objective=math.nan, best_bound=sign * bound,
                values=(), nodes_explored=nodes, wall_seconds=seconds)
        # report the exact objective at the incumbent, in the input sense
        obj = problem.objective_value(incumbent)
        bound_out = sign * min(bound, incumbent_obj)
        return MilpSolution(
            status=status, objective=obj, best_bound=bound_out,
            values=tuple(float(v) for v in incumbent),
            nodes_explored=nodes, wall_seconds=seconds)

    try:
        engine = _LpEngine(problem, config)
    except (MemoryError, LpSizeError):
        status = STATUS_FEASIBLE if incumbent is not None else STATUS_NO_SOLUTION
        return finish(status, 0, fallback_bound)

    # node = (bound, counter, {col: (lo, hi)})
    counter = 0
    heap: list[tuple[float, int, dict]] = []
    dive: list[tuple[float, int, dict]] = []
    done: set[int] = set()
    heapq.heappush(heap, (fallback_bound, counter, {}))
    diving = incumbent is not None
    explored = 0
    numeric_failures = 0

    def out_of_budget() -> bool:
        if config.node_limit is not None and explored >= config.node_limit:
            return True
        return time.perf_counter() - t0 > config.time_limit_seconds

    def open_bound() -> float:
        # every open node is in the heap (dive entries are duplicates),
        # so the first live heap entry carries the global bound
        while heap and heap[0][1] in done:
            heapq.heappop(heap)
        return heap[0][0] if heap else incumbent_obj

    def gap_closed() -> bool:
        if incumbent is None:
            return False
        gb = min(open_bound(), incumbent_obj)
        return relative_gap(incumbent_obj, gb) <= config.rel_gap_target

    while True:
        node = None
        while diving and dive:
            cand = dive.pop()
            if cand[1] not in done:
                node = cand
                break
        if node is None:
            diving = False
            while heap:
                cand = heapq.heappop(heap)
                if cand[1] not in done:
                    node = cand
                    break
        if node is None:
            # tree exhausted
            if incumbent is None:
                return finish(STATUS_INFEASIBLE, explored, math.inf)
            return finish(STATUS_OPTIMAL, explored, incumbent_obj)

        bound, node_id, overrides = node
        done.add(node_id)

        if incumbent is not None and bound >= incumbent_obj - 1e-9 * max(
                1.0, abs(incumbent_obj)):
            continue
        if out_of_budget():
            status = STATUS_FEASIBLE if incumbent is not None else STATUS_NO_SOLUTION
            return finish(status, explored, min(bound, open_bound()))

        lower = base_lower.copy()
        upper = base_upper.copy()
        for col, (lo, hi) in overrides.items():
            lower[col], upper[col] = lo, hi

        try:
            lp = engine.solve(lower, upper)
        except LpSizeError:
            status = STATUS_FEASIBLE if incumbent is not None else STATUS_NO_SOLUTION
            return finish(status, explored, min(bound, open_bound()))
        explored += 1

        if lp.status == LP_INFEASIBLE:
            continue
        if lp.status == LP_UNBOUNDED:
            # only the root relaxation can be unbounded; children shrink it
            return MilpSolution(
                status=STATUS_UNBOUNDED, objective=math.nan,
                best_bound=math.nan, values=(),
                nodes_explored=explored,
                wall_seconds=time.perf_counter() - t0)

        if lp.status == LP_OPTIMAL:
            node_bound = max(bound, lp.objective)
            if incumbent is not None and node_bound >= incumbent_obj - 1e-9 * max(
                    1.0, abs(incumbent_obj)):
                continue
            x = lp.x
            fracs = [(abs(x[j] - round(x[j])), j) for j in int_cols
                     if abs(x[j] - round(x[j])) > int_tol]
            if not fracs:
                obj = float(c_min @ x)
                if incumbent is None or obj < incumbent_obj - 1e-12 * max(
                        1.0, abs(incumbent_obj)):
                    incumbent = x.copy()
                    incumbent_obj = obj
                    diving = True
                    if gap_closed():
                        return finish(STATUS_OPTIMAL, explored,
                                      min(open_bound(), incumbent_obj))
                continue
            # most fractional: distance to 0.5 minimal, ties lowest index
            _, branch_col = min(
                ((abs(f - 0.5), j) for f, j in fracs), key=lambda t: t)
            branch_val = x[branch_col]
        else:
            # numerical trouble: branch blindly on the first open integer
            numeric_failures += 1
            if numeric_failures > 50:
                status = (STATUS_FEASIBLE if incumbent is not None
                          else STATUS_NO_SOLUTION)
                return finish(status, explored, min(bound, open_bound()))
            node_bound = bound
            open_ints = [j for j in int_cols if lower[j] < upper[j] - 0.5]
            if not open_ints:
                continue
            branch_col = open_ints[0]
            branch_val = (lower[branch_col] + upper[branch_col]) / 2.0

        lo_child = dict(overrides)
        hi_child = dict(overrides)
        cur_lo = overrides.get(branch_col, (base_lower[branch_col],
                                            base_upper[branch_col]))
        lo_child[branch_col] = (cur_lo[0], math.floor(branch_val))
        hi_child[branch_col] = (math.ceil(branch_val), cur_lo[1])

        frac_part = branch_val - math.floor(branch_val)
        first, second = ((hi_child, lo_child) if frac_part >= 0.5
                         else (lo_child, hi_child))
        for child in (second, first):  # `first` ends on top of the dive stack
            counter += 1
            entry = (node_bound, counter, child)
            heapq.heappush(heap, entry)
            dive.append(entry)

        if gap_closed():
            return finish(STATUS_OPTIMAL, explored,
                          min(open_bound(), incumbent_obj))


def solve_lp_file(path, config: Optional[SolveConfig] = None) -> MilpSolution:
    """Solve a problem stored in LP text format; see :mod:`.lp_format`."""
    from .lp_format import read_lp

    return solve(read_lp(path), config)
