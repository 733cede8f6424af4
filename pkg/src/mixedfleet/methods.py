"""Uniform front door for the four solution methods."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from .annealing import SaConfig, opt_sa
from .greedy import GreedyConfig, greedy_assignment
from .hierarchy import hierarchical_solve
from .milp.branch_bound import solve
from .milp.build import build_assign_at_once, solution_to_schedule, warm_start_values
from .milp.problem import SolveConfig
from .model import Instance, Schedule
from .validator import simulate

METHODS = ("hierarchical", "assign-at-once", "greedy", "sa")


@dataclass
class MethodRun:
    method: str
    feasible: bool
    schedule: Optional[Schedule]
    total_cost: float
    seconds: float
    info: dict = field(default_factory=dict)
    trace_rows: list = field(default_factory=list)


def run_method(
    inst: Instance,
    method: str,
    solve_config: Optional[SolveConfig] = None,
    use_warm_start: bool = True,
    greedy_config: Optional[GreedyConfig] = None,
    sa_config: Optional[SaConfig] = None,
) -> MethodRun:
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    solve_config = solve_config or SolveConfig()
    greedy_config = greedy_config or GreedyConfig()
    t0 = time.perf_counter()

    if method == "greedy":
        schedule = greedy_assignment(inst, greedy_config)
        seconds = time.perf_counter() - t0
        sim = simulate(inst, schedule)
        feasible = not schedule.unassigned and sim.clean
        return MethodRun(method, feasible, schedule, sim.total_cost, seconds,
                         info={"unassigned": list(schedule.unassigned)})

    if method == "sa":
        init = greedy_assignment(inst, greedy_config)
        if init.unassigned:
            return MethodRun(method, False, init, float("nan"),
                             time.perf_counter() - t0,
                             info={"unassigned": list(init.unassigned),
                                   "note": "greedy start incomplete"})
        schedule = opt_sa(inst, init, sa_config or SaConfig(), greedy_config)
        seconds = time.perf_counter() - t0
        sim = simulate(inst, schedule)
        return MethodRun(method, sim.clean, schedule, sim.total_cost, seconds)

    if method == "assign-at-once":
        built = build_assign_at_once(inst)
        warm = None
        if use_warm_start:
            init = greedy_assignment(inst, greedy_config)
            if not init.unassigned:
                try:
                    warm = warm_start_values(built, init)
                except ValueError:
                    warm = None
        sol = solve(built.problem, solve_config, warm)
        seconds = time.perf_counter() - t0
        if not sol.has_solution:
            return MethodRun(method, False, None, float("nan"), seconds,
                             info={"status": sol.status})
        schedule = solution_to_schedule(built, sol)
        sim = simulate(inst, schedule)
        return MethodRun(
            method, sim.clean, schedule, sim.total_cost, seconds,
            info={"status": sol.status, "objective": sol.objective,
                  "bound": sol.best_bound, "relGap": sol.rel_gap,
                  "nodes": sol.nodes_explored})

    result = hierarchical_solve(inst, solve_config, use_warm_start,
                                greedy_config)
    seconds = time.perf_counter() - t0
    return MethodRun(
        method, result.feasible, result.schedule, result.total_cost, seconds,
        info={"demotions": list(result.demotions),
              "iterations": len(result.trace)},
        trace_rows=[t.to_row() for t in result.trace])
