"""Independent day-replay of a schedule.

Recomputes timings, charger occupancy, state of charge and money from the
domain primitives alone (no shared code with the MILP builders), so solver
output can be cross-checked against a second opinion.  Violations are
returned as data, never raised.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .model import (
    BlockAssignment,
    ChargeAssignment,
    Instance,
    Schedule,
    TransitBlock,
    accounting_slot_index,
    deadhead_minutes,
    energy_for_block,
    energy_for_deadhead,
    item_end,
    item_end_location,
    item_key,
    item_start,
    item_start_location,
    kwh_to_gallons,
)

_TOL = 1e-6

DEFAULT_CO2_KG_PER_GALLON = 10.18


@dataclass(frozen=True)
class Violation:
    rule: str
    vehicle: Optional[str]
    items: tuple[str, ...]
    detail: str

    def to_json_line(self) -> str:
        return json.dumps({
            "rule": self.rule,
            "vehicle": self.vehicle,
            "items": list(self.items),
            "detail": self.detail,
        }, sort_keys=True)


@dataclass
class SimulationResult:
    violations: list[Violation]
    soc_by_slot: dict[str, list[float]]
    slot_costs: list[float]
    total_cost: float
    diesel_gallons: float
    ev_kwh: float  # electricity purchased: in-day charging + replenishment
    co2_tons: float = 0.0
    notes: dict = field(default_factory=dict)

    @property
    def clean(self) -> bool:
        return not self.violations


def simulate(inst: Instance, schedule: Schedule,
             strict_intra_block: bool = False,
             co2_kg_per_gallon: float = DEFAULT_CO2_KG_PER_GALLON,
             ) -> SimulationResult:
    """Replay a schedule against every model rule and account its cost.

    ``strict_intra_block`` additionally checks the charge level on arrival
    at each item (after the connecting hop), which with straight-line
    interpolation inside blocks is the tightest pointwise check available.
    """
    violations: list[Violation] = []

    def flag(rule: str, vehicle: Optional[str], items: tuple[str, ...],
             detail: str) -> None:
        violations.append(Violation(rule, vehicle, items, detail))

    known_vehicles = {v.id for v in inst.vehicles}
    known_blocks = {b.id for b in inst.blocks}
    known_poles = {p.id for p in inst.poles}

    usable: list = []
    for it in schedule.items:
        if it.vehicle_id not in known_vehicles:
            flag("unknown-id", it.vehicle_id, (), "vehicle not in instance")
            continue
        if isinstance(it, BlockAssignment) and it.block_id not in known_blocks:
            flag("unknown-id", it.vehicle_id, (it.block_id,),
                 "block not in instance")
            continue
        if isinstance(it, ChargeAssignment):
            if it.pole_id not in known_poles:
                flag("unknown-id", it.vehicle_id, (it.pole_id,),
                     "pole not in instance")
                continue
            if not 0 <= it.slot_index < len(inst.slots):
                flag("unknown-id", it.vehicle_id, (str(it.slot_index),),
                     "slot index out of range")
                continue
        usable.append(it)

    # --- coverage: every block exactly once ---
    served: dict[str, list[str]] = {}
    for it in usable:
        if isinstance(it, BlockAssignment):
            served.setdefault(it.block_id, []).append(it.vehicle_id)
    for b in inst.blocks:
        owners = served.get(b.id, [])
        if not owners:
            flag("coverage", None, (b.id,), "block is not served")
        elif len(owners) > 1:
            flag("coverage", None, (b.id,),
                 f"block served {len(owners)} times by {sorted(owners)}")

    # --- charging rules ---
    pole_slot: dict[tuple[str, int], list[str]] = {}
    vehicle_slot: dict[tuple[str, int], list[str]] = {}
    for it in usable:
        if not isinstance(it, ChargeAssignment):
            continue
        v = inst.vehicle(it.vehicle_id)
        if not v.is_electric:
            flag("electric-only", v.id, (it.pole_id, str(it.slot_index)),
                 "diesel-family vehicle assigned to a charger")
        pole = inst.pole(it.pole_id)
        if it.charge_kwh < -_TOL or it.charge_kwh > pole.q_max_kwh + _TOL:
            flag("charge-cap", v.id, (it.pole_id, str(it.slot_index)),
                 f"charge {it.charge_kwh} outside [0, {pole.q_max_kwh}]")
        pole_slot.setdefault((it.pole_id, it.slot_index), []).append(v.id)
        vehicle_slot.setdefault((v.id, it.slot_index), []).append(it.pole_id)
    for (pole_id, sidx), users in pole_slot.items():
        if len(users) > 1:
            flag("charger-exclusive", None, (pole_id, str(sidx)),
                 f"pole double-booked by {sorted(users)}")
    for (vid, sidx), poles in vehicle_slot.items():
        if len(poles) > 1:
            flag("one-pole-per-slot", vid, (str(sidx),),
                 f"vehicle at {sorted(poles)} in one slot")

    # --- per-vehicle replay (structurally broken items are excluded) ---
    cleaned = Schedule(items=tuple(usable), unassigned=schedule.unassigned)
    n_slots = len(inst.slots)
    soc_by_slot: dict[str, list[float]] = {}
    charge_by_slot: dict[str, list[float]] = {}
    for v in inst.vehicles:
        items = cleaned.items_for(inst, v.id)
        charges = {
            item_key_for(it): it.charge_kwh
            for it in usable
            if isinstance(it, ChargeAssignment) and it.vehicle_id == v.id
        }

        for t in (x for x in items if isinstance(x, TransitBlock)):
            if v.seats < t.min_seats:
                flag("seats", v.id, (t.id,),
                     f"{v.seats} seats < required {t.min_seats}")

        for x1, x2 in zip(items, items[1:]):
            ride = deadhead_minutes(
                inst, item_end_location(x1), item_start_location(x2))
            if item_end(x1) + ride > item_start(x2):
                flag("timing", v.id, (_label(x1), _label(x2)),
                     f"{item_end(x1)}+{ride} min hop misses start "
                     f"{item_start(x2)}")

        # running charge level after every item (and on arrival in
        # strict mode)
        soc = v.soc_max
        prev = None
        consumption = [0.0] * n_slots
        charged = [0.0] * n_slots
        for x in items:
            if prev is not None:
                hop = energy_for_deadhead(
                    inst, v, item_end_location(prev), item_start_location(x))
                soc -= hop
                sidx = accounting_slot_index(inst, item_start(x))
                if sidx is not None:
                    consumption[sidx] += hop
                if strict_intra_block and soc < v.soc_min - _TOL:
                    flag("soc-floor", v.id, (_label(x),),
                         f"arrives with {soc:.6f} kWh, floor {v.soc_min}")
            if isinstance(x, TransitBlock):
                soc -= energy_for_block(v, x)
                sidx = accounting_slot_index(inst, x.end_min)
                if sidx is not None:
                    consumption[sidx] += energy_for_block(v, x)
            else:
                added = charges.get(item_key(x), 0.0)
                soc += added
                charged[x.slot.index] += added
            if soc < v.soc_min - _TOL:
                flag("soc-floor", v.id, (_label(x),),
                     f"charge level {soc:.6f} kWh below floor {v.soc_min}")
            if soc > v.soc_max + _TOL:
                flag("soc-ceiling", v.id, (_label(x),),
                     f"charge level {soc:.6f} kWh above capacity {v.soc_max}")
            prev = x

        # slot-boundary ledger (first slot pinned to a full charge)
        ledger = [v.soc_max] * n_slots
        for s in range(1, n_slots):
            ledger[s] = ledger[s - 1] + charged[s] - consumption[s]
            if ledger[s] < v.soc_min - _TOL:
                flag("soc-floor", v.id, (f"slot{s}",),
                     f"slot-end level {ledger[s]:.6f} below {v.soc_min}")
            if ledger[s] > v.soc_max + _TOL:
                flag("soc-ceiling", v.id, (f"slot{s}",),
                     f"slot-end level {ledger[s]:.6f} above {v.soc_max}")
        soc_by_slot[v.id] = ledger
        charge_by_slot[v.id] = charged

    # --- money ---
    slot_costs = [0.0] * n_slots
    for s in inst.slots:
        slot_costs[s.index] = s.price_per_kwh * sum(
            charge_by_slot[v.id][s.index] for v in inst.vehicles)
    diesel_gallons = 0.0
    ev_kwh = 0.0
    last = inst.last_slot
    for v in inst.vehicles:
        deficit = v.soc_max - soc_by_slot[v.id][last.index]
        if v.is_electric:
            slot_costs[last.index] += deficit * last.price_per_kwh
            ev_kwh += deficit + sum(charge_by_slot[v.id])
        else:
            gallons = kwh_to_gallons(deficit, inst.diesel_kwh_per_gallon)
            slot_costs[last.index] += gallons * inst.diesel_price_per_gallon
            diesel_gallons += gallons

    total = sum(slot_costs)
    return SimulationResult(
        violations=violations,
        soc_by_slot=soc_by_slot,
        slot_costs=slot_costs,
        total_cost=total,
        diesel_gallons=diesel_gallons,
        ev_kwh=ev_kwh,
        co2_tons=co2_estimate(diesel_gallons, co2_kg_per_gallon),
    )


def item_key_for(it: ChargeAssignment) -> tuple:
    return ("c", it.pole_id, it.slot_index)


def _label(x) -> str:
    if isinstance(x, TransitBlock):
        return x.id
    return f"{x.pole.id}@{x.slot.index}"


def co2_estimate(diesel_gallons: float,
                 kg_per_gallon: float = DEFAULT_CO2_KG_PER_GALLON) -> float:
    """Tailpipe CO2 in metric tons for the diesel burned."""
    return diesel_gallons * kg_per_gallon / 1000.0


def compare(inst: Instance, schedules: Mapping[str, Schedule],
            co2_kg_per_gallon: float = DEFAULT_CO2_KG_PER_GALLON,
            ) -> list[dict]:
    """One report row per named schedule, replayed through the simulator."""
    rows = []
    for name, schedule in schedules.items():
        sim = simulate(inst, schedule, co2_kg_per_gallon=co2_kg_per_gallon)
        rows.append({
            "name": name,
            "totalCost": sim.total_cost,
            "dieselGallons": sim.diesel_gallons,
            "evKwh": sim.ev_kwh,
            "co2Tons": sim.co2_tons,
            "violations": len(sim.violations),
        })
    return rows


def violations_to_json_lines(result: SimulationResult) -> str:
    return "\n".join(v.to_json_line() for v in result.violations)
