"""Translate an :class:`Instance` into mixed-integer programs.

Three problem flavours share one core:

* distance stage -- cover as much block distance as possible with a
  high-efficiency sub-fleet; unserved blocks carry a slack marker.
* cost stage -- serve a given block set completely with a sub-fleet at
  minimum replenishment cost.
* whole-problem -- the cost stage over the full fleet and all blocks.

Variable keys (in ``problem.var_index``):

* ``("a_t", vehicle, block)``        block served by vehicle
* ``("a_c", vehicle, pole, slot)``   vehicle parked at charger for a slot
* ``("m", vehicle, key1, key2)``     connecting trip between two items
* ``("chg", vehicle, slot)``         energy added during a slot (kWh)
* ``("soc", vehicle, slot)``         state of charge at slot end (kWh)
* ``("g", slot)``                    replenishment cost booked to a slot
* ``("u", block)``                   slack: block left unserved (stage 1)
* ``("dist", vehicle)``              distance served by vehicle (stage 1)

Connecting-trip variables exist only for time-feasible ordered pairs
whose deadhead distance is nonzero; zero-length hops consume nothing and
would add dead weight.  Seat rules are enforced by never creating the
corresponding ``a_t`` columns.  Positive tariff and fuel prices are
assumed; with a zero price an optimal point may carry cost-neutral
phantom trips.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from ..model import (
    BlockAssignment,
    ChargeAssignment,
    ChargingSlot,
    Instance,
    Item,
    Schedule,
    TransitBlock,
    VehicleSpec,
    accounting_slot_index,
    can_seat,
    deadhead_miles,
    energy_for_block,
    feasible_pair,
    item_end,
    item_end_location,
    item_key,
    item_sort_key,
    item_start,
    item_start_location,
)
from .problem import BINARY, CONTINUOUS, EQ, GE, LE, MilpProblem, MilpSolution

_EPS = 1e-9


@dataclass(frozen=True)
class BuiltModel:
    """A problem plus the context needed to map points back to schedules."""

    problem: MilpProblem
    inst: Instance
    fleet: tuple[VehicleSpec, ...]
    blocks: tuple[TransitBlock, ...]
    charging_slots: tuple[ChargingSlot, ...]
    has_slack: bool


@dataclass(frozen=True)
class _Pair:
    i: int
    j: int
    feasible: bool
    miles: float
    intermediates: tuple[int, ...]


def _item_pairs(inst: Instance, items: Sequence[Item]) -> list[_Pair]:
    """Ordered item pairs with feasibility, hop distance, in-between items."""
    n = len(items)
    starts = [item_start(x) for x in items]
    ends = [item_end(x) for x in items]
    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            feas = feasible_pair(inst, None, items[i], items[j])
            miles = deadhead_miles(
                inst, item_end_location(items[i]), item_start_location(items[j]))
            inter = tuple(
                k for k in range(n)
                if k != i and k != j
                and starts[k] >= starts[i] and ends[k] <= starts[j]
            ) if feas and miles > 0 else ()
            pairs.append(_Pair(i, j, feas, miles, inter))
    return pairs


def _build_core(
    inst: Instance,
    fleet: Sequence[VehicleSpec],
    blocks: Sequence[TransitBlock],
    with_slack: bool,
    occupied_slots: Iterable[tuple[str, int]] = (),
    name: str = "fleet-milp",
) -> BuiltModel:
    fleet = tuple(fleet)
    blocks = tuple(blocks)
    occupied = set(occupied_slots)
    cslots = tuple(cs for cs in inst.charging_slots()
                   if (cs.pole.id, cs.slot.index) not in occupied)
    has_electric = any(v.is_electric for v in fleet)

    items: list[Item] = sorted(list(blocks) + list(cslots), key=item_sort_key)
    keys = [item_key(x) for x in items]
    pairs = _item_pairs(inst, items)

    p = MilpProblem(name=name)

    def eligible(v: VehicleSpec, x: Item) -> bool:
        if isinstance(x, TransitBlock):
            return can_seat(v, x)
        return v.is_electric

    a_key: dict[tuple[str, tuple], tuple] = {}
    for v in fleet:
        for x in items:
            if not eligible(v, x):
                continue
            if isinstance(x, TransitBlock):
                key = ("a_t", v.id, x.id)
                label = f"a[{v.id},{x.id}]"
            else:
                key = ("a_c", v.id, x.pole.id, x.slot.index)
                label = f"a[{v.id},{x.pole.id},{x.slot.index}]"
            p.add_var(key, label, 0.0, 1.0, BINARY)
            a_key[(v.id, item_key(x))] = key

    for v in fleet:
        for pair in pairs:
            if not pair.feasible or pair.miles <= 0:
                continue
            k1, k2 = keys[pair.i], keys[pair.j]
            if (v.id, k1) not in a_key or (v.id, k2) not in a_key:
                continue
            p.add_var(("m", v.id, k1, k2),
                      f"m[{v.id},{_short(k1)},{_short(k2)}]", 0.0, 1.0, BINARY)

    for v in fleet:
        if not v.is_electric:
            continue
        for s in inst.slots:
            upper = 0.0 if s.index == 0 else v.soc_max
            p.add_var(("chg", v.id, s.index), f"c[{v.id},{s.index}]",
                      0.0, upper, CONTINUOUS)

    for v in fleet:
        for s in inst.slots:
            lo, hi = (v.soc_max, v.soc_max) if s.index == 0 else (v.soc_min, v.soc_max)
            p.add_var(("soc", v.id, s.index), f"e[{v.id},{s.index}]",
                      lo, hi, CONTINUOUS)

    for s in inst.slots:
        p.add_var(("g", s.index), f"g[{s.index}]", 0.0, math.inf, CONTINUOUS)

    if with_slack:
        for t in blocks:
            p.add_var(("u", t.id), f"u[{t.id}]", 0.0, 1.0, BINARY)
        total_distance = sum(t.distance_mi for t in blocks)
        for v in fleet:
            p.add_var(("dist", v.id), f"delta[{v.id}]",
                      0.0, total_distance, CONTINUOUS)

    # --- coverage ---
    for t in blocks:
        terms = [(p.col(("a_t", v.id, t.id)), 1.0)
                 for v in fleet if p.has(("a_t", v.id, t.id))]
        if with_slack:
            terms.append((p.col(("u", t.id)), 1.0))
        p.add_constraint(f"cover[{t.id}]", terms, EQ, 1.0)

    # --- distance tally (stage 1 only) ---
    if with_slack:
        for v in fleet:
            terms = [(p.col(("dist", v.id)), 1.0)]
            terms += [(p.col(("a_t", v.id, t.id)), -t.distance_mi)
                      for t in blocks if p.has(("a_t", v.id, t.id))]
            p.add_constraint(f"dist[{v.id}]", terms, EQ, 0.0)

    # --- charger exclusivity: one bus per (pole, slot) ---
    if has_electric:
        for cs in cslots:
            terms = [(p.col(("a_c", v.id, cs.pole.id, cs.slot.index)), 1.0)
                     for v in fleet if v.is_electric]
            p.add_constraint(
                f"pole[{cs.pole.id},{cs.slot.index}]", terms, LE, 1.0)

    # --- one pole per (bus, slot) ---
    for v in fleet:
        if not v.is_electric:
            continue
        for s in inst.slots:
            terms = [(p.col(("a_c", v.id, cs.pole.id, s.index)), 1.0)
                     for cs in cslots if cs.slot.index == s.index]
            if terms:
                p.add_constraint(f"onepole[{v.id},{s.index}]", terms, LE, 1.0)

    # --- incompatible pairs and connecting-trip linkage ---
    for v in fleet:
        for pair in pairs:
            k1, k2 = keys[pair.i], keys[pair.j]
            key1, key2 = a_key.get((v.id, k1)), a_key.get((v.id, k2))
            if key1 is None or key2 is None:
                continue
            c1, c2 = p.col(key1), p.col(key2)
            if not pair.feasible:
                p.add_constraint(
                    f"conflict[{v.id},{_short(k1)},{_short(k2)}]",
                    [(c1, 1.0), (c2, 1.0)], LE, 1.0)
                continue
            mkey = ("m", v.id, k1, k2)
            if not p.has(mkey):
                continue
            cm = p.col(mkey)
            # forced on when the two items are consecutive assignments
            terms = [(cm, 1.0), (c1, -1.0), (c2, -1.0)]
            for k in pair.intermediates:
                mid = a_key.get((v.id, keys[k]))
                if mid is not None:
                    terms.append((p.col(mid), 1.0))
            p.add_constraint(
                f"hop_lb[{v.id},{_short(k1)},{_short(k2)}]", terms, GE, -1.0)
            p.add_constraint(
                f"hop_ub1[{v.id},{_short(k1)},{_short(k2)}]",
                [(cm, 1.0), (c1, -1.0)], LE, 0.0)
            p.add_constraint(
                f"hop_ub2[{v.id},{_short(k1)},{_short(k2)}]",
                [(cm, 1.0), (c2, -1.0)], LE, 0.0)

    # --- charge only while parked at a pole, within its per-slot limit ---
    for v in fleet:
        if not v.is_electric:
            continue
        for s in inst.slots:
            terms = [(p.col(("chg", v.id, s.index)), 1.0)]
            terms += [
                (p.col(("a_c", v.id, cs.pole.id, s.index)), -cs.pole.q_max_kwh)
                for cs in cslots if cs.slot.index == s.index
            ]
            p.add_constraint(f"cap[{v.id},{s.index}]", terms, LE, 0.0)

    # --- state of charge balance per slot ---
    consumption: dict[tuple[str, int], list[tuple[int, float]]] = {}
    for v in fleet:
        for t in blocks:
            if not p.has(("a_t", v.id, t.id)):
                continue
            sidx = accounting_slot_index(inst, t.end_min)
            if sidx is None:
                continue
            consumption.setdefault((v.id, sidx), []).append(
                (p.col(("a_t", v.id, t.id)), energy_for_block(v, t)))
        for pair in pairs:
            mkey = ("m", v.id, keys[pair.i], keys[pair.j])
            if not p.has(mkey):
                continue
            sidx = accounting_slot_index(inst, item_start(items[pair.j]))
            if sidx is None:
                continue
            consumption.setdefault((v.id, sidx), []).append(
                (p.col(mkey), pair.miles / v.op_eff))

    for v in fleet:
        for s in inst.slots[1:]:
            terms = [(p.col(("soc", v.id, s.index)), 1.0),
                     (p.col(("soc", v.id, s.index - 1)), -1.0)]
            if v.is_electric:
                terms.append((p.col(("chg", v.id, s.index)), -1.0))
            terms += consumption.get((v.id, s.index), [])
            p.add_constraint(f"soc[{v.id},{s.index}]", terms, EQ, 0.0)

    # --- per-slot replenishment cost; the last slot also restores
    #     every vehicle to full ---
    last = inst.last_slot
    for s in inst.slots:
        terms = [(p.col(("g", s.index)), 1.0)]
        for v in fleet:
            if v.is_electric:
                terms.append((p.col(("chg", v.id, s.index)), -s.price_per_kwh))
        if s.index != last.index:
            p.add_constraint(f"cost[{s.index}]", terms, EQ, 0.0)
            continue
        rhs = 0.0
        for v in fleet:
            rate = (last.price_per_kwh if v.is_electric else
                    inst.diesel_price_per_gallon / inst.diesel_kwh_per_gallon)
            terms.append((p.col(("soc", v.id, last.index)), rate))
            rhs += rate * v.soc_max
        p.add_constraint(f"cost[{last.index}]", terms, EQ, rhs)

    if with_slack:
        p.set_objective("max", {p.col(("dist", v.id)): 1.0 for v in fleet})
    else:
        p.set_objective("min", {p.col(("g", s.index)): 1.0 for s in inst.slots})

    return BuiltModel(problem=p, inst=inst, fleet=fleet, blocks=blocks,
                      charging_slots=cslots, has_slack=with_slack)


def _short(key: tuple) -> str:
    return key[1] if key[0] == "t" else f"{key[1]}.{key[2]}"


def build_level1(inst: Instance, fleet: Sequence[VehicleSpec]) -> BuiltModel:
    """Distance-maximizing stage over the efficient sub-fleet."""
    fleet = tuple(fleet)
    if not fleet:
        raise ValueError("stage-1 fleet must be nonempty")
    laggards = [v.id for v in fleet if v.op_eff < inst.op_eff_threshold]
    if laggards:
        raise ValueError(
            f"stage-1 fleet must meet the efficiency threshold; "
            f"violations: {laggards}")
    return _build_core(inst, fleet, inst.blocks, with_slack=True,
                       name="stage1-distance")


def build_level2(
    inst: Instance,
    blocks: Sequence[TransitBlock],
    fleet: Sequence[VehicleSpec],
    occupied_slots: Iterable[tuple[str, int]] = (),
) -> BuiltModel:
    """Cost-minimizing stage: serve every given block with the sub-fleet.

    ``occupied_slots`` removes (pole id, slot index) pairs already claimed
    by another sub-fleet's schedule so merged output cannot double-book a
    charger.
    """
    return _build_core(inst, fleet, blocks, with_slack=False,
                       occupied_slots=occupied_slots, name="stage2-cost")


def build_assign_at_once(inst: Instance) -> BuiltModel:
    """Whole fleet, all blocks, single cost-minimizing program."""
    model = _build_core(inst, inst.vehicles, inst.blocks, with_slack=False,
                        name="assign-at-once")
    return model


def distance_floor_model(built: BuiltModel, distance_total: float) -> BuiltModel:
    """Tie-break companion for stage 1: among points serving at least the
    achieved total distance, minimize replenishment cost."""
    if not built.has_slack:
        raise ValueError("distance floor only applies to the distance stage")
    src = built.problem
    p = MilpProblem(
        name=src.name + "+costtiebreak",
        variables=list(src.variables),
        constraints=list(src.constraints),
        var_index=dict(src.var_index),
    )
    terms = [(p.col(("dist", v.id)), 1.0) for v in built.fleet]
    floor = distance_total - 1e-6 * max(1.0, abs(distance_total))
    p.add_constraint("distance_floor", terms, GE, floor)
    p.set_objective("min", {p.col(("g", s.index)): 1.0
                            for s in built.inst.slots})
    return BuiltModel(problem=p, inst=built.inst, fleet=built.fleet,
                      blocks=built.blocks, charging_slots=built.charging_slots,
                      has_slack=True)


class WarmStartMappingError(ValueError):
    """The schedule cannot be expressed in the problem's variables."""


def warm_start_values(built: BuiltModel, schedule: Schedule) -> dict[tuple, float]:
    """Variable values realizing a schedule, with derived quantities
    recomputed by forward simulation.  Raises if the schedule violates any
    constraint of the problem."""
    from .problem import check_point

    inst = built.inst
    p = built.problem
    values: dict[tuple, float] = {}
    for key, col in p.var_index.items():
        values[key] = 0.0
    for v in built.fleet:
        values[("soc", v.id, 0)] = v.soc_max

    fleet_ids = {v.id for v in built.fleet}
    block_ids = {t.id for t in built.blocks}
    avail = {(cs.pole.id, cs.slot.index) for cs in built.charging_slots}

    for it in schedule.items:
        if it.vehicle_id not in fleet_ids:
            raise WarmStartMappingError(
                f"vehicle {it.vehicle_id} is not part of this problem")
        if isinstance(it, BlockAssignment):
            if it.block_id not in block_ids:
                raise WarmStartMappingError(
                    f"block {it.block_id} is not part of this problem")
            key = ("a_t", it.vehicle_id, it.block_id)
            if not p.has(key):
                raise WarmStartMappingError(
                    f"assignment {it.vehicle_id}->{it.block_id} has no "
                    f"variable (seating rules exclude it)")
            values[key] = 1.0
        else:
            key = ("a_c", it.vehicle_id, it.pole_id, it.slot_index)
            if (it.pole_id, it.slot_index) not in avail or not p.has(key):
                raise WarmStartMappingError(
                    f"charging slot ({it.pole_id},{it.slot_index}) is not "
                    f"available to {it.vehicle_id} in this problem")
            values[key] = 1.0
            values[("chg", it.vehicle_id, it.slot_index)] = (
                values.get(("chg", it.vehicle_id, it.slot_index), 0.0)
                + it.charge_kwh)

    # connecting trips + state of charge by forward simulation
    for v in built.fleet:
        items = schedule.items_for(inst, v.id)
        consumption = [0.0] * len(inst.slots)
        for x in items:
            if isinstance(x, TransitBlock):
                sidx = accounting_slot_index(inst, x.end_min)
                if sidx is not None:
                    consumption[sidx] += energy_for_block(v, x)
        for x1, x2 in zip(items, items[1:]):
            miles = deadhead_miles(
                inst, item_end_location(x1), item_start_location(x2))
            if miles > 0:
                mkey = ("m", v.id, item_key(x1), item_key(x2))
                if p.has(mkey):
                    values[mkey] = 1.0
                sidx = accounting_slot_index(inst, item_start(x2))
                if sidx is not None:
                    consumption[sidx] += miles / v.op_eff
        soc = v.soc_max
        for s in inst.slots[1:]:
            soc += values.get(("chg", v.id, s.index), 0.0) - consumption[s.index]
            values[("soc", v.id, s.index)] = soc

    # per-slot cost, terminal replenishment included
    for s in inst.slots:
        g = s.price_per_kwh * sum(
            values.get(("chg", v.id, s.index), 0.0)
            for v in built.fleet if v.is_electric)
        if s.index == inst.last_slot.index:
            for v in built.fleet:
                deficit = v.soc_max - values[("soc", v.id, s.index)]
                rate = (s.price_per_kwh if v.is_electric else
                        inst.diesel_price_per_gallon / inst.diesel_kwh_per_gallon)
                g += rate * deficit
        values[("g", s.index)] = g

    if built.has_slack:
        assigned = {it.block_id for it in schedule.block_assignments}
        for t in built.blocks:
            values[("u", t.id)] = 0.0 if t.id in assigned else 1.0
        for v in built.fleet:
            values[("dist", v.id)] = sum(
                t.distance_mi for t in built.blocks
                if values.get(("a_t", v.id, t.id), 0.0) > 0.5)

    vec = [0.0] * p.num_vars
    for key, col in p.var_index.items():
        vec[col] = values[key]
    bad = check_point(p, vec, feas_tol=1e-6, check_integrality=True)
    if bad:
        raise WarmStartMappingError(f"schedule violates constraint: {bad[0]}")
    return values


def solution_to_schedule(built: BuiltModel, solution: MilpSolution) -> Schedule:
    """Read a solved point back into a schedule."""
    if not solution.has_solution:
        raise ValueError(f"no solution to extract (status {solution.status})")
    p = built.problem
    vals = solution.values
    items: list = []
    unassigned: list[str] = []
    for t in built.blocks:
        owner = None
        for v in built.fleet:
            key = ("a_t", v.id, t.id)
            if p.has(key) and vals[p.col(key)] > 0.5:
                owner = v.id
                break
        if owner is None:
            unassigned.append(t.id)
        else:
            items.append(BlockAssignment(owner, t.id))
    for cs in built.charging_slots:
        for v in built.fleet:
            if not v.is_electric:
                continue
            key = ("a_c", v.id, cs.pole.id, cs.slot.index)
            if p.has(key) and vals[p.col(key)] > 0.5:
                charge = vals[p.col(("chg", v.id, cs.slot.index))]
                charge = min(max(charge, 0.0), cs.pole.q_max_kwh)
                if charge < _EPS:
                    charge = 0.0
                items.append(ChargeAssignment(
                    v.id, cs.pole.id, cs.slot.index, charge))
    return Schedule(items=tuple(items), unassigned=tuple(unassigned))


def model_counts(built: BuiltModel) -> dict[str, int]:
    """Variable and constraint tallies by family, for growth audits."""
    out: dict[str, int] = {}
    for key in built.problem.var_index:
        out[f"var:{key[0]}"] = out.get(f"var:{key[0]}", 0) + 1
    for con in built.problem.constraints:
        family = con.name.split("[", 1)[0]
        out[f"con:{family}"] = out.get(f"con:{family}", 0) + 1
    out["vars"] = built.problem.num_vars
    out["cons"] = built.problem.num_constraints
    return out
