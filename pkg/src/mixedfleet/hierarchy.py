"""Two-stage fleet decomposition with demotion-based feasibility repair.

Stage 1 gives the efficient sub-fleet (normally the electric buses) as
much block distance as possible; stage 2 covers the leftovers with the
rest of the fleet at minimum cost.  If stage 2 cannot be completed, the
least efficient stage-1 bus is demoted to stage 2 and the loop repeats;
with an empty stage-1 fleet the run degenerates to the single
whole-problem solve, which is feasible whenever the fleet is large
enough at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .greedy import GreedyConfig, greedy_assignment
from .milp.branch_bound import solve
from .milp.build import (
    BuiltModel,
    build_level1,
    build_level2,
    distance_floor_model,
    solution_to_schedule,
    warm_start_values,
)
from .milp.problem import (
    STATUS_INFEASIBLE,
    STATUS_NO_SOLUTION,
    MilpSolution,
    SolveConfig,
)
from .model import ChargeAssignment, Instance, Schedule, VehicleSpec
from .scenario import validate_instance
from .validator import simulate


def split_fleet(inst: Instance) -> tuple[tuple[VehicleSpec, ...],
                                         tuple[VehicleSpec, ...]]:
    """Partition by the efficiency threshold: (stage-1 fleet, the rest)."""
    v1 = tuple(v for v in inst.vehicles if v.op_eff >= inst.op_eff_threshold)
    v2 = tuple(v for v in inst.vehicles if v.op_eff < inst.op_eff_threshold)
    return v1, v2


@dataclass
class IterationTrace:
    iteration: int
    v1_count: int
    v2_count: int
    stage1_status: Optional[str]
    stage1_distance: Optional[float]
    stage2_status: str
    stage2_cost: Optional[float]
    demoted: Optional[str] = None

    def to_row(self) -> dict:
        return {
            "iteration": self.iteration,
            "v1Count": self.v1_count,
            "v2Count": self.v2_count,
            "stage1Status": self.stage1_status or "",
            "stage1Distance": self.stage1_distance,
            "stage2Status": self.stage2_status,
            "stage2Cost": self.stage2_cost,
            "demoted": self.demoted or "",
        }


@dataclass
class HierarchyResult:
    feasible: bool
    schedule: Optional[Schedule]
    total_cost: float
    trace: list[IterationTrace] = field(default_factory=list)
    demotions: list[str] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)


def _greedy_warm(built: BuiltModel, inst, vehicles, blocks, occupied,
                 greedy_config, require_complete: bool):
    schedule = greedy_assignment(
        inst, greedy_config, vehicles=vehicles, blocks=blocks,
        occupied_slots=occupied)
    if require_complete and schedule.unassigned:
        return None
    try:
        return warm_start_values(built, schedule)
    except ValueError:
        return None


def _solve_stage1(inst, fleet, config, use_warm_start, greedy_config):
    built = build_level1(inst, fleet)
    warm = None
    if use_warm_start:
        warm = _greedy_warm(built, inst, fleet, inst.blocks, (), greedy_config,
                            require_complete=False)
    first = solve(built.problem, config, warm)
    if not first.has_solution:
        return built, first, None
    # among equally long assignments, prefer the cheapest; the first
    # pass's point stays feasible and seeds the second pass
    tie = distance_floor_model(built, first.objective)
    second = solve(tie.problem, config, first.values)
    chosen = second if second.has_solution else first
    return tie, chosen, first.objective


def hierarchical_solve(
    inst: Instance,
    config: Optional[SolveConfig] = None,
    use_warm_start: bool = True,
    greedy_config: Optional[GreedyConfig] = None,
) -> HierarchyResult:
    """Run the staged solve, demoting buses until the day is coverable."""
    config = config or SolveConfig()
    greedy_config = greedy_config or GreedyConfig()
    diags = validate_instance(inst)
    if diags:
        raise ValueError(
            "instance fails pre-solve validation: " + "; ".join(diags))

    v1, v2 = split_fleet(inst)
    v1, v2 = list(v1), list(v2)
    trace: list[IterationTrace] = []
    demotions: list[str] = []

    iteration = 0
    while True:
        iteration += 1
        stage1_status = None
        stage1_distance = None
        schedule1 = Schedule(items=())
        occupied: set[tuple[str, int]] = set()
        if v1:
            built1, sol1, stage1_distance = _solve_stage1(
                inst, tuple(v1), config, use_warm_start, greedy_config)
            stage1_status = sol1.status
            if sol1.has_solution:
                schedule1 = solution_to_schedule(built1, sol1)
            leftover = tuple(inst.block(bid) for bid in schedule1.unassigned) \
                if sol1.has_solution else inst.blocks
            occupied = {
                (it.pole_id, it.slot_index)
                for it in schedule1.items if isinstance(it, ChargeAssignment)
            }
        else:
            leftover = inst.blocks

        built2 = build_level2(inst, leftover, tuple(v2), occupied)
        warm2 = None
        if use_warm_start and v2:
            warm2 = _greedy_warm(built2, inst, tuple(v2), leftover, occupied,
                                 greedy_config, require_complete=True)
        sol2 = solve(built2.problem, config, warm2)

        entry = IterationTrace(
            iteration=iteration,
            v1_count=len(v1),
            v2_count=len(v2),
            stage1_status=stage1_status,
            stage1_distance=stage1_distance,
            stage2_status=sol2.status,
            stage2_cost=sol2.objective if sol2.has_solution else None,
        )
        trace.append(entry)

        if sol2.status in (STATUS_INFEASIBLE, STATUS_NO_SOLUTION):
            if not v1:
                return HierarchyResult(
                    feasible=False, schedule=None, total_cost=math.nan,
                    trace=trace, demotions=demotions,
                    diagnostics=[
                        "whole-fleet problem is infeasible: the fleet "
                        "cannot cover the block set"],
                )
            victim = min(v1, key=lambda v: (v.op_eff, v.id))
            v1.remove(victim)
            v2.append(victim)
            demotions.append(victim.id)
            entry.demoted = victim.id
            continue

        schedule2 = solution_to_schedule(built2, sol2)
        merged = Schedule(
            items=tuple(schedule1.items) + tuple(schedule2.items),
            unassigned=(),
        )
        sim = simulate(inst, merged)
        if not sim.clean:
            raise RuntimeError(
                "staged solve produced an invalid merged schedule: "
                + sim.violations[0].to_json_line())
        return HierarchyResult(
            feasible=True, schedule=merged, total_cost=sim.total_cost,
            trace=trace, demotions=demotions)
