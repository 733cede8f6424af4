"""Dense bounded-variable primal simplex.

Two-phase method on a full tableau: phase 1 drives artificial variables
out of equality/violated rows, phase 2 optimizes the real objective.
Nonbasic variables rest at a finite bound; entering steps may terminate
in a bound flip instead of a basis exchange.  Dantzig pricing with a
switch to Bland's rule after a run of degenerate steps guards against
cycling.  Minimization only; callers negate to maximize.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

LP_OPTIMAL = "optimal"
LP_INFEASIBLE = "infeasible"
LP_UNBOUNDED = "unbounded"
LP_ITERATION_LIMIT = "iteration_limit"

_AT_LOWER = 0
_AT_UPPER = 1
_BASIC = 2
_FREE = 3

_PIVOT_TOL = 1e-9
_DUAL_TOL = 1e-9


class LpSizeError(RuntimeError):
    """The dense tableau would exceed the configured memory budget."""


@dataclass
class LpOutcome:
    status: str
    x: Optional[np.ndarray]
    objective: float
    iterations: int


def _trivial_outcome(c: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> LpOutcome:
    # No constraints: each variable independently sits at its cheap bound.
    x = np.zeros(len(c))
    for j in range(len(c)):
        if c[j] > 0:
            if math.isinf(lower[j]):
                return LpOutcome(LP_UNBOUNDED, None, -math.inf, 0)
            x[j] = lower[j]
        elif c[j] < 0:
            if math.isinf(upper[j]):
                return LpOutcome(LP_UNBOUNDED, None, -math.inf, 0)
            x[j] = upper[j]
        else:
            x[j] = lower[j] if not math.isinf(lower[j]) else (
                upper[j] if not math.isinf(upper[j]) else 0.0)
    return LpOutcome(LP_OPTIMAL, x, float(c @ x), 0)


def simplex_solve(
    c: np.ndarray,
    a_matrix: np.ndarray,
    senses: Sequence[str],
    rhs: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    feas_tol: float = 1e-7,
    max_iterations: Optional[int] = None,
    max_cells: Optional[int] = None,
) -> LpOutcome:
    """Minimize ``c @ x`` subject to ``A x (<=,=,>=) b`` and ``l <= x <= u``."""
    c = np.asarray(c, dtype=float)
    lower = np.asarray(lower, dtype=float).copy()
    upper = np.asarray(upper, dtype=float).copy()
    n = len(c)
    m = len(rhs)
    if m == 0:
        return _trivial_outcome(c, lower, upper)

    a = np.array(a_matrix, dtype=float)
    b = np.asarray(rhs, dtype=float).copy()
    senses = list(senses)
    for i, s in enumerate(senses):
        if s == ">=":
            a[i, :] *= -1.0
            b[i] *= -1.0
            senses[i] = "<="
        elif s not in ("<=", "="):
            raise ValueError(f"unknown row sense {s!r}")

    # Columns: structural | one slack per row | artificials as needed.
    # Slack bounds: [0, inf) for <=, [0, 0] for =.
    slack_lower = np.zeros(m)
    slack_upper = np.array([math.inf if s == "<=" else 0.0 for s in senses])

    status = np.empty(n + m, dtype=np.int8)
    values = np.zeros(n + m)
    for j in range(n):
        if not math.isinf(lower[j]):
            status[j] = _AT_LOWER
            values[j] = lower[j]
        elif not math.isinf(upper[j]):
            status[j] = _AT_UPPER
            values[j] = upper[j]
        else:
            status[j] = _FREE
            values[j] = 0.0

    residual = b - a @ values[:n]

    # Rows whose slack cannot absorb the residual get an artificial column.
    basis = np.empty(m, dtype=np.int64)
    beta = np.zeros(m)
    art_rows: list[int] = []
    art_sign: list[float] = []
    for i in range(m):
        if slack_lower[i] - feas_tol <= residual[i] <= slack_upper[i] + feas_tol:
            basis[i] = n + i
            beta[i] = residual[i]
            status[n + i] = _BASIC
        else:
            status[n + i] = _AT_LOWER
            values[n + i] = 0.0
            art_rows.append(i)
            art_sign.append(1.0 if residual[i] >= 0 else -1.0)

    k = len(art_rows)
    n_total = n + m + k
    if max_cells is not None and (m + 2) * (n_total + 1) > max_cells:
        raise LpSizeError(
            f"tableau {m + 2}x{n_total + 1} exceeds budget of {max_cells} cells")

    full_lower = np.concatenate([lower, slack_lower, np.zeros(k)])
    full_upper = np.concatenate([upper, slack_upper, np.full(k, math.inf)])
    full_status = np.concatenate([status, np.full(k, _AT_LOWER, dtype=np.int8)])
    full_values = np.concatenate([values, np.zeros(k)])

    # work = [A | I_slack | artificials | b]; tableau rows are premultiplied
    # by the inverse of the starting basis (diagonal of +-1).
    work = np.zeros((m, n_total + 1))
    work[:, :n] = a
    work[np.arange(m), n + np.arange(m)] = 1.0
    for pos, (i, sg) in enumerate(zip(art_rows, art_sign)):
        work[i, n + m + pos] = sg
    work[:, -1] = b

    for pos, (i, sg) in enumerate(zip(art_rows, art_sign)):
        if sg < 0:
            work[i, :] *= -1.0
        basis[i] = n + m + pos
        beta[i] = abs(residual[i])
        full_status[n + m + pos] = _BASIC

    row_active = np.ones(m, dtype=bool)

    phase1_cost = np.zeros(n_total)
    phase1_cost[n + m:] = 1.0
    phase2_cost = np.zeros(n_total)
    phase2_cost[:n] = c

    if max_iterations is None:
        max_iterations = max(5000, 50 * (m + n))

    iterations = 0

    def reduced_costs(cost: np.ndarray) -> np.ndarray:
        cb = cost[basis]
        if not cb.any():
            return cost.copy()
        return cost - cb @ work[:, :-1]

    def refresh_beta() -> None:
        # x_B = B^-1 b - sum over nonbasic j of T[:, j] * x_j
        vals = np.where(full_status == _BASIC, 0.0, full_values)
        nz = np.nonzero(vals)[0]
        beta[:] = work[:, -1]
        if len(nz):
            beta[:] -= work[:, nz] @ vals[nz]

    def run_phase(cost: np.ndarray) -> str:
        nonlocal iterations
        d = reduced_costs(cost)
        bland = False
        degenerate_run = 0
        bland_threshold = max(200, 4 * m)
        while True:
            if iterations >= max_iterations:
                return LP_ITERATION_LIMIT
            iterations += 1

            fixed = full_lower == full_upper
            enter_lo = (full_status == _AT_LOWER) & (d < -_DUAL_TOL) & ~fixed
            enter_up = (full_status == _AT_UPPER) & (d > _DUAL_TOL) & ~fixed
            enter_fr = (full_status == _FREE) & (np.abs(d) > _DUAL_TOL)
            candidates = np.nonzero(enter_lo | enter_up | enter_fr)[0]
            if len(candidates) == 0:
                return LP_OPTIMAL
            if bland:
                j = int(candidates[0])
            else:
                j = int(candidates[np.argmax(np.abs(d[candidates]))])
            if full_status[j] == _AT_UPPER or (full_status[j] == _FREE and d[j] > 0):
                direction = -1.0
            else:
                direction = 1.0

            col = work[:, j]
            span = full_upper[j] - full_lower[j]
            t_own = span if not math.isinf(span) else math.inf

            rate = -direction * col
            limits = np.full(m, math.inf)
            pos = (rate > _PIVOT_TOL) & row_active
            neg = (rate < -_PIVOT_TOL) & row_active
            if pos.any():
                head = full_upper[basis[pos]] - beta[pos]
                limits[pos] = np.maximum(head, 0.0) / rate[pos]
            if neg.any():
                head = beta[neg] - full_lower[basis[neg]]
                limits[neg] = np.maximum(head, 0.0) / (-rate[neg])
            t_rows = float(limits.min()) if m else math.inf

            if t_rows < t_own - _PIVOT_TOL:
                ties = np.nonzero(limits <= t_rows + _PIVOT_TOL)[0]
                if bland:
                    leave_row = int(ties[np.argmin(basis[ties])])
                else:
                    # prefer the largest pivot element for stability
                    leave_row = int(ties[np.argmax(np.abs(col[ties]))])
                t_step = max(t_rows, 0.0)
                leave_to_upper = bool(pos[leave_row])
            else:
                if math.isinf(t_own):
                    return LP_UNBOUNDED
                # entering variable travels bound to bound; basis unchanged
                beta[:] += -direction * t_own * col
                full_values[j] = (full_upper[j] if direction > 0 else full_lower[j])
                full_status[j] = _AT_UPPER if direction > 0 else _AT_LOWER
                degenerate_run = degenerate_run + 1 if t_own <= _PIVOT_TOL else 0
                if degenerate_run > bland_threshold:
                    bland = True
                continue

            degenerate_run = degenerate_run + 1 if t_step <= _PIVOT_TOL else 0
            if degenerate_run > bland_threshold:
                bland = True

            # basis exchange at row leave_row
            enter_value = full_values[j] + direction * t_step
            beta[:] += -direction * t_step * col
            leaving = basis[leave_row]
            full_status[leaving] = _AT_UPPER if leave_to_upper else _AT_LOWER
            full_values[leaving] = (full_upper[leaving] if leave_to_upper
                                    else full_lower[leaving])

            piv = work[leave_row, j]
            work[leave_row, :] /= piv
            factors = work[:, j].copy()
            factors[leave_row] = 0.0
            work[:, :] -= np.outer(factors, work[leave_row, :])
            d_j = d[j]
            d -= d_j * work[leave_row, :-1]

            basis[leave_row] = j
            full_status[j] = _BASIC
            beta[leave_row] = enter_value

    outcome = run_phase(phase1_cost)
    if outcome == LP_ITERATION_LIMIT:
        return LpOutcome(LP_ITERATION_LIMIT, None, math.nan, iterations)
    refresh_beta()
    art_cols = np.arange(n + m, n_total)
    art_total = 0.0
    for i in range(m):
        if basis[i] >= n + m:
            art_total += abs(beta[i])
    if art_total > feas_tol * max(1.0, float(np.max(np.abs(b))) if m else 1.0):
        return LpOutcome(LP_INFEASIBLE, None, math.inf, iterations)

    # Pin artificials at zero, pivot basic ones out where a real column exists.
    full_lower[art_cols] = 0.0
    full_upper[art_cols] = 0.0
    for i in range(m):
        if basis[i] < n + m:
            continue
        row = work[i, :n + m]
        pivots = np.nonzero(np.abs(row) > 1e-7)[0]
        pivots = [int(p) for p in pivots if full_status[p] != _BASIC]
        if not pivots:
            row_active[i] = False
            continue
        j = pivots[0]
        piv = work[i, j]
        work[i, :] /= piv
        factors = work[:, j].copy()
        factors[i] = 0.0
        work -= np.outer(factors, work[i, :])
        old = basis[i]
        full_status[old] = _AT_LOWER
        full_values[old] = 0.0
        basis[i] = j
        prev_value = full_values[j]
        full_status[j] = _BASIC
        beta[i] = prev_value
    refresh_beta()

    outcome = run_phase(phase2_cost)
    if outcome == LP_UNBOUNDED:
        return LpOutcome(LP_UNBOUNDED, None, -math.inf, iterations)
    if outcome == LP_ITERATION_LIMIT:
        return LpOutcome(LP_ITERATION_LIMIT, None, math.nan, iterations)

    refresh_beta()
    x = np.empty(n)
    for j in range(n):
        if full_status[j] == _BASIC:
            continue
        x[j] = full_values[j]
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = beta[i]
    x = np.clip(x, lower, upper)
    return LpOutcome(LP_OPTIMAL, x, float(c @ x), iterations)
