"""Simulated-annealing baseline over block moves and swaps.

Starts from a complete schedule (normally the greedy one), proposes
moving a block to another vehicle or swapping two blocks, repairs the
charging plan of the touched vehicles, and accepts worsening moves with
the usual exponential probability under geometric cooling.  Every
accepted state is feasible by construction and the best state seen is
returned.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from .greedy import GreedyConfig, _VehicleState, _assign_charging, can_serve
from .model import (
    BlockAssignment,
    ChargeAssignment,
    ChargingSlot,
    Instance,
    Schedule,
    TransitBlock,
    kwh_to_gallons,
)
from .validator import simulate


@dataclass(frozen=True)
class SaConfig:
    iteration_limit: int = 40000
    initial_temperature: Optional[float] = None  # default: 5% of start cost
    cooling_rate: float = 0.9995
    seed: int = 0

    def __post_init__(self) -> None:
        if self.iteration_limit < 0:
            raise ValueError("iteration_limit must be >= 0")
        if not 0.0 < self.cooling_rate < 1.0:
            raise ValueError("cooling_rate must be in (0, 1)")
        if self.initial_temperature is not None and self.initial_temperature <= 0:
            raise ValueError("initial_temperature must be positive")


class _FleetState:
    """Mutable view of a complete schedule, costed per vehicle."""

    def __init__(self, inst: Instance, schedule: Schedule,
                 greedy_config: GreedyConfig):
        self.inst = inst
        self.greedy_config = greedy_config
        self.chains: dict[str, _VehicleState] = {
            v.id: _VehicleState(inst, v) for v in inst.vehicles}
        self.occupancy: dict[tuple[str, int], str] = {}
        self.owner: dict[str, str] = {}
        for it in schedule.items:
            if isinstance(it, BlockAssignment):
                self.owner[it.block_id] = it.vehicle_id
            else:
                key = ("c", it.pole_id, it.slot_index)
                self.chains[it.vehicle_id].charges[key] = it.charge_kwh
                self.occupancy[(it.pole_id, it.slot_index)] = it.vehicle_id
        for v in inst.vehicles:
            for x in schedule.items_for(inst, v.id):
                self.chains[v.id].insert(x)
        self.costs = {v.id: self.vehicle_cost(self.chains[v.id])
                      for v in inst.vehicles}

    def vehicle_cost(self, st: _VehicleState) -> float:
        inst = self.inst
        v = st.vehicle
        cost = 0.0
        for x in st.items:
            if not isinstance(x, TransitBlock):
                cost += (x.slot.price_per_kwh
                         * st.charges.get(("c", x.pole.id, x.slot.index), 0.0))
        traj = st.trajectory(st.items)
        end = traj[-1] if traj else v.soc_max
        deficit = max(0.0, v.soc_max - end)
        if v.is_electric:
            cost += deficit * inst.last_slot.price_per_kwh
        else:
            cost += (kwh_to_gallons(deficit, inst.diesel_kwh_per_gallon)
                     * inst.diesel_price_per_gallon)
        return cost

    def total_cost(self) -> float:
        return sum(self.costs.values())

    def rebuild(self, vehicle_id: str, block_ids: list[str],
                occupancy: dict[tuple[str, int], str]
                ) -> Optional[_VehicleState]:
        """Fresh chain for a vehicle serving ``block_ids``; None if the
        combination is infeasible."""
        inst = self.inst
        v = inst.vehicle(vehicle_id)
        st = _VehicleState(inst, v)
        scratch: list = []
        for bid in sorted(block_ids,
                          key=lambda b: (inst.block(b).start_min, b)):
            block = inst.block(bid)
            if not can_serve(st, inst, v, block):
                return None
            st.insert(block)
            if v.is_electric:
                idx = st.items.index(block)
                soc_after = st.trajectory(st.items)[idx]
                if soc_after <= self.greedy_config.soc_threshold(v) + 1e-9:
                    _assign_charging(st, inst, occupancy, block, scratch)
        return st

    def blocks_of(self, vehicle_id: str) -> list[str]:
        return [x.id for x in self.chains[vehicle_id].items
                if isinstance(x, TransitBlock)]

    def propose(self, assignment: dict[str, list[str]]
                ) -> Optional[tuple[dict[str, _VehicleState],
                                    dict[tuple[str, int], str], float]]:
        """Rebuild the given vehicles with new block lists.

        Returns (new chains, new occupancy, cost delta) or None when
        infeasible."""
        occupancy = {k: vid for k, vid in self.occupancy.items()
                     if vid not in assignment}
        new_chains: dict[str, _VehicleState] = {}
        for vid in sorted(assignment):
            st = self.rebuild(vid, assignment[vid], occupancy)
            if st is None:
                return None
            new_chains[vid] = st
            for x in st.items:
                if isinstance(x, ChargingSlot):
                    occupancy[(x.pole.id, x.slot.index)] = vid
        delta = sum(self.vehicle_cost(st) for st in new_chains.values()) \
            - sum(self.costs[vid] for vid in assignment)
        return new_chains, occupancy, delta

    def commit(self, new_chains: dict[str, _VehicleState],
               occupancy: dict[tuple[str, int], str]) -> None:
        for vid, st in new_chains.items():
            self.chains[vid] = st
            self.costs[vid] = self.vehicle_cost(st)
            for x in st.items:
                if isinstance(x, TransitBlock):
                    self.owner[x.id] = vid
        self.occupancy = occupancy

    def to_schedule(self) -> Schedule:
        items: list = []
        for vid in sorted(self.chains):
            st = self.chains[vid]
            for x in st.items:
                if isinstance(x, TransitBlock):
                    items.append(BlockAssignment(vid, x.id))
                else:
                    items.append(ChargeAssignment(
                        vid, x.pole.id, x.slot.index,
                        st.charges.get(("c", x.pole.id, x.slot.index), 0.0)))
        return Schedule(items=tuple(items))


def opt_sa(
    inst: Instance,
    init_schedule: Schedule,
    config: Optional[SaConfig] = None,
    greedy_config: Optional[GreedyConfig] = None,
    trace_path: Optional[Union[str, Path]] = None,
) -> Schedule:
    """Anneal block moves/swaps starting from a clean, complete schedule."""
    config = config or SaConfig()
    greedy_config = greedy_config or GreedyConfig()

    init_sim = simulate(inst, init_schedule)
    if init_schedule.unassigned or not init_sim.clean:
        first = (init_sim.violations[0].detail if init_sim.violations
                 else "schedule is incomplete")
        raise ValueError(f"annealing needs a clean, complete start: {first}")
    if config.iteration_limit == 0:
        return init_schedule

    rng = random.Random(config.seed)
    state = _FleetState(inst, init_schedule, greedy_config)
    current = state.total_cost()
    best_cost = current
    best = init_schedule

    temperature = (config.initial_temperature
                   if config.initial_temperature is not None
                   else max(0.05 * current, 1e-6))
    block_ids = sorted(b.id for b in inst.blocks)
    vehicle_ids = sorted(v.id for v in inst.vehicles)
    trace_rows = []

    for iteration in range(config.iteration_limit):
        if len(vehicle_ids) >= 2 and block_ids:
            use_swap = rng.random() < 0.5
        else:
            use_swap = False
        proposal = None
        if use_swap:
            b1, b2 = rng.sample(block_ids, 2) if len(block_ids) >= 2 else (None, None)
            if b1 is not None and state.owner[b1] != state.owner[b2]:
                v1, v2 = state.owner[b1], state.owner[b2]
                l1 = [b for b in state.blocks_of(v1) if b != b1] + [b2]
                l2 = [b for b in state.blocks_of(v2) if b != b2] + [b1]
                proposal = {v1: l1, v2: l2}
        else:
            if block_ids and len(vehicle_ids) >= 2:
                b = rng.choice(block_ids)
                src = state.owner[b]
                choices = [v for v in vehicle_ids if v != src]
                dst = rng.choice(choices)
                proposal = {
                    src: [x for x in state.blocks_of(src) if x != b],
                    dst: state.blocks_of(dst) + [b],
                }
        if proposal is not None:
            outcome = state.propose(proposal)
            if outcome is not None:
                new_chains, occupancy, delta = outcome
                accept = delta < 0 or (
                    temperature > 0
                    and rng.random() < math.exp(-delta / temperature))
                if accept:
                    state.commit(new_chains, occupancy)
                    current += delta
                    if current < best_cost - 1e-12:
                        best_cost = current
                        best = state.to_schedule()
        temperature *= config.cooling_rate
        if trace_path is not None:
            trace_rows.append(f"{iteration},{temperature:.9g},"
                              f"{current:.9g},{best_cost:.9g}")

    if trace_path is not None:
        Path(trace_path).write_text(
            "iteration,temperature,currentCost,bestCost\n"
            + "\n".join(trace_rows) + "\n")

    final = simulate(inst, best)
    if not final.clean:
        raise RuntimeError("annealing produced an invalid schedule: "
                           + final.violations[0].to_json_line())
    return best
