"""Exhaustive reference optimizer for very small instances.

Enumerates every block-to-vehicle assignment and every way the electric
buses can claim charger slots, then prices each combination; per-pattern
charge amounts come from a tiny scipy linear program over slot prefix
constraints.  Completely independent of the package's MILP builder and
branch-and-bound solver (it shares only the domain primitives), so it can
serve as an oracle for both.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from mixedfleet.model import (
    ChargingSlot,
    Instance,
    TransitBlock,
    accounting_slot_index,
    can_seat,
    deadhead_miles,
    deadhead_minutes,
    energy_for_block,
    item_end,
    item_end_location,
    item_sort_key,
    item_start,
    item_start_location,
)

_TOL = 1e-9


@dataclass
class OracleResult:
    feasible: bool
    cost: float
    assignment: dict  # block id -> vehicle id (or None when uncovered)
    distance: float


def _pair_ok(inst, x1, x2) -> bool:
    gap = deadhead_minutes(inst, item_end_location(x1), item_start_location(x2))
    return item_end(x1) + gap <= item_start(x2)


def _chain_ok(inst, items) -> bool:
    # the optimization model forbids every incompatible pair, not just
    # consecutive ones
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            if not _pair_ok(inst, items[i], items[j]):
                return False
    return True


def _chain_consumption(inst, vehicle, items) -> Optional[list[float]]:
    """Energy booked per slot for a chain, or None on a booking clash."""
    out = [0.0] * len(inst.slots)
    prev = None
    for x in items:
        if prev is not None:
            miles = deadhead_miles(
                inst, item_end_location(prev), item_start_location(x))
            if miles > 0:
                sidx = accounting_slot_index(inst, item_start(x))
                if sidx is not None:
                    out[sidx] += miles / vehicle.op_eff
        if isinstance(x, TransitBlock):
            sidx = accounting_slot_index(inst, x.end_min)
            if sidx is not None:
                out[sidx] += energy_for_block(vehicle, x)
        prev = x
    return out


def _best_ev_cost(inst, vehicle, blocks, pattern: Sequence[ChargingSlot]
                  ) -> Optional[float]:
    """Cheapest total cost for one electric bus serving ``blocks`` while
    parked at the charger slots in ``pattern`` (charge amounts optimized,
    zero allowed).  None if no charge amounts make the day feasible."""
    items = sorted(list(blocks) + list(pattern), key=item_sort_key)
    if not _chain_ok(inst, items):
        return None
    consumption = _chain_consumption(inst, vehicle, items)
    n = len(inst.slots)
    w_last = inst.last_slot.price_per_kwh
    charge_slots = sorted({cs.slot.index for cs in pattern})
    charge_slots = [s for s in charge_slots if s != 0]
    caps = {}
    for cs in pattern:
        if cs.slot.index in charge_slots:
            caps[cs.slot.index] = cs.pole.q_max_kwh

    # prefix constraints: soc_max - floor >= cum_consumption(n) - cum_charge(n) >= 0
    cum_cons = np.cumsum(consumption)
    if not charge_slots:
        total = float(cum_cons[-1])
        lowest = vehicle.soc_max - max(cum_cons)
        if lowest < vehicle.soc_min - 1e-6:
            return None
        return total * w_last

    k = len(charge_slots)
    c_obj = np.array([inst.slots[s].price_per_kwh - w_last
                      for s in charge_slots])
    a_ub, b_ub = [], []
    for nidx in range(1, n):
        row = [1.0 if s <= nidx else 0.0 for s in charge_slots]
        # soc_n <= soc_max  ->  cum_charge <= cum_cons
        a_ub.append(row)
        b_ub.append(cum_cons[nidx])
        # soc_n >= soc_min  ->  cum_charge >= cum_cons - usable
        a_ub.append([-r for r in row])
        b_ub.append(-(cum_cons[nidx] - vehicle.usable_kwh))
    bounds = [(0.0, caps[s]) for s in charge_slots]
    res = linprog(c_obj, A_ub=np.array(a_ub), b_ub=np.array(b_ub),
                  bounds=bounds, method="highs")
    if res.status != 0:
        return None
    return float(cum_cons[-1]) * w_last + float(res.fun)


def _diesel_cost(inst, vehicle, blocks) -> Optional[float]:
    items = sorted(blocks, key=item_sort_key)
    if not _chain_ok(inst, items):
        return None
    consumption = _chain_consumption(inst, vehicle, items)
    cum = np.cumsum(consumption)
    if vehicle.soc_max - max(cum) < vehicle.soc_min - 1e-6:
        return None
    per_kwh = inst.diesel_price_per_gallon / inst.diesel_kwh_per_gallon
    return float(cum[-1]) * per_kwh


def _ev_patterns(inst, vehicle, blocks) -> list[tuple]:
    """Charger-slot subsets worth considering for one electric bus."""
    slots = [cs for cs in inst.charging_slots() if cs.slot.index != 0]
    usable = []
    for cs in slots:
        trial = sorted(list(blocks) + [cs], key=item_sort_key)
        if _chain_ok(inst, trial):
            usable.append(cs)
    patterns = [()]
    for r in range(1, len(usable) + 1):
        for combo in itertools.combinations(usable, r):
            items = sorted(list(blocks) + list(combo), key=item_sort_key)
            if _chain_ok(inst, items):
                patterns.append(combo)
    return patterns


def enumerate_optimum(inst: Instance, cover_all: bool = True) -> OracleResult:
    """Minimum-cost day by brute force.

    ``cover_all=False`` instead maximizes total served distance (ties
    broken by cost), mirroring the distance-first stage.
    """
    vehicles = list(inst.vehicles)
    blocks = list(inst.blocks)
    options: list[Optional[str]] = [v.id for v in vehicles]
    if not cover_all:
        options = options + [None]

    # chains recur across assignments; price each (vehicle, chain) once
    memo: dict = {}

    best: Optional[OracleResult] = None
    for combo in itertools.product(options, repeat=len(blocks)):
        by_vehicle: dict[str, list] = {v.id: [] for v in vehicles}
        ok = True
        for b, owner in zip(blocks, combo):
            if owner is None:
                continue
            v = inst.vehicle(owner)
            if not can_seat(v, b):
                ok = False
                break
            by_vehicle[owner].append(b)
        if not ok:
            continue
        distance = sum(b.distance_mi for b, o in zip(blocks, combo)
                       if o is not None)

        cost = _price_assignment(inst, by_vehicle, memo)
        if cost is None:
            continue
        candidate = OracleResult(
            feasible=True, cost=cost,
            assignment={b.id: o for b, o in zip(blocks, combo)},
            distance=distance)
        if best is None:
            best = candidate
        elif cover_all:
            if candidate.cost < best.cost - _TOL:
                best = candidate
        else:
            if (candidate.distance > best.distance + _TOL
                    or (abs(candidate.distance - best.distance) <= _TOL
                        and candidate.cost < best.cost - _TOL)):
                best = candidate
    if best is None:
        return OracleResult(feasible=False, cost=math.inf, assignment={},
                            distance=0.0)
    return best


def _price_assignment(inst, by_vehicle: dict[str, list],
                      memo: Optional[dict] = None) -> Optional[float]:
    """Cheapest cost of one full assignment, optimizing charging jointly."""
    memo = memo if memo is not None else {}
    total = 0.0
    ev_jobs = []
    for v in inst.vehicles:
        chain = sorted(by_vehicle[v.id], key=item_sort_key)
        if not v.is_electric:
            key = ("diesel", v.id, tuple(b.id for b in chain))
            if key not in memo:
                memo[key] = _diesel_cost(inst, v, chain)
            if memo[key] is None:
                return None
            total += memo[key]
        else:
            ev_jobs.append((v, chain))

    if not ev_jobs:
        return total

    per_ev_patterns = []
    for v, chain in ev_jobs:
        key = ("patterns", v.id, tuple(b.id for b in chain))
        if key not in memo:
            memo[key] = _ev_patterns(inst, v, chain)
        per_ev_patterns.append(memo[key])

    def priced(v, chain, pattern):
        key = ("ev", v.id, tuple(b.id for b in chain),
               tuple((cs.pole.id, cs.slot.index) for cs in pattern))
        if key not in memo:
            memo[key] = _best_ev_cost(inst, v, chain, pattern)
        return memo[key]

    best_ev = None
    for joint in itertools.product(*per_ev_patterns):
        used: set[tuple[str, int]] = set()
        clash = False
        for pattern in joint:
            for cs in pattern:
                key = (cs.pole.id, cs.slot.index)
                if key in used:
                    clash = True
                    break
                used.add(key)
            if clash:
                break
        if clash:
            continue
        cost = 0.0
        feasible = True
        for (v, chain), pattern in zip(ev_jobs, joint):
            c = priced(v, chain, pattern)
            if c is None:
                feasible = False
                break
            cost += c
        if feasible and (best_ev is None or cost < best_ev):
            best_ev = cost
    if best_ev is None:
        return None
    return total + best_ev
