"""Feasibility-aware greedy assignment.

Blocks are processed in start-time order; each goes to the serviceable
vehicle with the lowest biased cost (energy for the block and its
connecting hops plus a small penalty on waiting time).  When an electric
bus finishes a block at or below its charging threshold it books the
earliest free, reachable charger slots until full or until its next
commitment intervenes.  The output always replays cleanly through the
validator; completeness is the caller's concern.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .model import (
    BlockAssignment,
    ChargeAssignment,
    ChargingSlot,
    Instance,
    Item,
    Schedule,
    TransitBlock,
    VehicleSpec,
    can_seat,
    deadhead_minutes,
    energy_for_block,
    energy_for_deadhead,
    item_end,
    item_end_location,
    item_key,
    item_start,
    item_start_location,
)

_TOL = 1e-9


@dataclass(frozen=True)
class GreedyConfig:
    wait_penalty: float = 0.001  # cost per minute of waiting before a block
    # charging trigger: "half-floor" charges once SoC falls to half the
    # usable floor, "half-capacity" once below half the full battery
    threshold_mode: str = "half-floor"
    threshold_overrides: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.wait_penalty < 0:
            raise ValueError("wait_penalty must be >= 0")
        if self.threshold_mode not in ("half-floor", "half-capacity"):
            raise ValueError(f"unknown threshold_mode {self.threshold_mode!r}")

    def soc_threshold(self, vehicle: VehicleSpec) -> float:
        if vehicle.model_id in self.threshold_overrides:
            return float(self.threshold_overrides[vehicle.model_id])
        if self.threshold_mode == "half-capacity":
            return 0.5 * vehicle.soc_max
        return 0.5 * vehicle.soc_min


class _VehicleState:
    """One vehicle's growing chain of blocks and charging slots."""

    __slots__ = ("inst", "vehicle", "items", "starts", "charges", "end_soc")

    def __init__(self, inst: Instance, vehicle: VehicleSpec):
        self.inst = inst
        self.vehicle = vehicle
        self.items: list[Item] = []
        self.starts: list[int] = []
        self.charges: dict[tuple, float] = {}  # item key -> kWh added
        self.end_soc = vehicle.soc_max

    def neighbors(self, x: Item) -> tuple[Optional[Item], Optional[Item], bool]:
        """(previous, following, overlaps) relative to the chain."""
        xs, xe = item_start(x), item_end(x)
        idx = bisect.bisect_left(self.starts, xs)
        left = self.items[idx - 1] if idx > 0 else None
        right = self.items[idx] if idx < len(self.items) else None
        if left is not None and item_end(left) > xs:
            return left, right, True
        if right is not None and item_start(right) < xe:
            return left, right, True
        prev = left
        return prev, right, False

    def trajectory(self, items: Sequence[Item]) -> list[float]:
        """SoC after each item (charging applied, hops included)."""
        v = self.vehicle
        soc = v.soc_max
        out = []
        prev: Optional[Item] = None
        for x in items:
            if prev is not None:
                soc -= energy_for_deadhead(
                    self.inst, v, item_end_location(prev), item_start_location(x))
            if isinstance(x, TransitBlock):
                soc -= energy_for_block(v, x)
            else:
                soc += self.charges.get(item_key(x), 0.0)
            out.append(soc)
            prev = x
        return out

    def insert(self, x: Item, charge_kwh: Optional[float] = None) -> None:
        idx = bisect.bisect_left(self.starts, item_start(x))
        self.items.insert(idx, x)
        self.starts.insert(idx, item_start(x))
        if charge_kwh is not None:
            self.charges[item_key(x)] = charge_kwh
        traj = self.trajectory(self.items)
        self.end_soc = traj[-1] if traj else self.vehicle.soc_max


def can_serve(state: _VehicleState, inst: Instance, vehicle: VehicleSpec,
              x: Item) -> bool:
    """Whether the vehicle can take on item ``x`` given its current chain.

    Timing against the nearest earlier item is strict (a zero-minute
    buffer is rejected); timing against a later item follows the ordinary
    pair rule.  The projected charge on arrival, minus the item's own
    energy, must stay at or above the floor, and inserting the item must
    not starve anything already scheduled afterwards.
    """
    if isinstance(x, TransitBlock) and not can_seat(vehicle, x):
        return False
    energy_x = (energy_for_block(vehicle, x)
                if isinstance(x, TransitBlock) else 0.0)
    if not state.items:
        return vehicle.soc_max - energy_x >= vehicle.soc_min - _TOL

    prev, nxt, overlap = state.neighbors(x)
    if overlap:
        return False
    if prev is not None:
        gap = deadhead_minutes(
            inst, item_end_location(prev), item_start_location(x))
        if item_end(prev) + gap >= item_start(x):
            return False
    if nxt is not None:
        gap = deadhead_minutes(
            inst, item_end_location(x), item_start_location(nxt))
        if item_end(x) + gap > item_start(nxt):
            return False

    candidate = list(state.items)
    bisect.insort(candidate, x, key=item_start)
    traj = state.trajectory(candidate)
    floor = vehicle.soc_min - _TOL
    ceil = vehicle.soc_max + _TOL
    return all(floor <= soc <= ceil for soc in traj)


def biased_cost(state: _VehicleState, inst: Instance, vehicle: VehicleSpec,
                x: Item, wait_penalty: float) -> float:
    """Greedy score: item energy, hop energies, and a waiting penalty."""
    cost = (energy_for_block(vehicle, x)
            if isinstance(x, TransitBlock) else 0.0)
    prev, nxt, _ = state.neighbors(x)
    if prev is not None:
        cost += energy_for_deadhead(
            inst, vehicle, item_end_location(prev), item_start_location(x))
        cost += wait_penalty * (item_start(x) - item_end(prev))
    if nxt is not None:
        cost += energy_for_deadhead(
            inst, vehicle, item_end_location(x), item_start_location(nxt))
    return cost


def _assign_charging(
    state: _VehicleState,
    inst: Instance,
    occupancy: dict[tuple[str, int], str],
    after: TransitBlock,
    items_out: list,
) -> None:
    """Book charger slots for an electric bus after ``after`` until full,
    blocked, or its next commitment."""
    v = state.vehicle
    idx = state.items.index(after)
    nxt = state.items[idx + 1] if idx + 1 < len(state.items) else None
    traj = state.trajectory(state.items)
    soc = traj[idx]
    location = after.destination
    clock = after.end_min

    for slot in inst.slots:
        if slot.start_min < clock:
            continue
        if soc >= v.soc_max - _TOL:
            break
        if nxt is not None and slot.end_min > item_start(nxt):
            break
        placed = False
        poles = sorted(
            inst.poles,
            key=lambda cp: (deadhead_minutes(inst, location, cp.location), cp.id))
        for pole in poles:
            if occupancy.get((pole.id, slot.index)) is not None:
                continue
            ride = deadhead_minutes(inst, location, pole.location)
            if clock + ride > slot.start_min:
                continue
            if nxt is not None:
                back = deadhead_minutes(
                    inst, pole.location, item_start_location(nxt))
                if slot.end_min + back > item_start(nxt):
                    continue
            arrive = soc - energy_for_deadhead(inst, v, location, pole.location)
            if arrive < v.soc_min - _TOL:
                continue
            # never overfill a later, already-fixed charge
            tail = state.trajectory(state.items)[idx:]
            peak = max([arrive] + tail[1:]) if len(tail) > 1 else arrive
            allowed = min(pole.q_max_kwh, v.soc_max - peak)
            if allowed <= _TOL:
                continue
            # detouring via the pole may starve something downstream;
            # verify the whole chain before committing
            cslot = ChargingSlot(pole, slot)
            candidate = list(state.items)
            bisect.insort(candidate, cslot, key=item_start)
            state.charges[item_key(cslot)] = allowed
            traj = state.trajectory(candidate)
            if not all(v.soc_min - _TOL <= s <= v.soc_max + _TOL for s in traj):
                del state.charges[item_key(cslot)]
                continue
            occupancy[(pole.id, slot.index)] = v.id
            state.insert(cslot)
            items_out.append(ChargeAssignment(v.id, pole.id, slot.index, allowed))
            soc = arrive + allowed
            location = pole.location
            clock = slot.end_min
            idx = state.items.index(cslot)
            placed = True
            break
        if not placed:
            continue
    return


def greedy_assignment(
    inst: Instance,
    config: Optional[GreedyConfig] = None,
    vehicles: Optional[Sequence[VehicleSpec]] = None,
    blocks: Optional[Sequence[TransitBlock]] = None,
    occupied_slots: Iterable[tuple[str, int]] = (),
) -> Schedule:
    """Assign blocks greedily; unplaceable blocks are reported, not fatal.

    ``vehicles``/``blocks`` restrict the run to a sub-problem and
    ``occupied_slots`` pre-claims chargers, so staged solves can share one
    instance without double-booking.
    """
    config = config or GreedyConfig()
    fleet = tuple(vehicles if vehicles is not None else inst.vehicles)
    todo = sorted(blocks if blocks is not None else inst.blocks,
                  key=lambda t: (t.start_min, t.id))

    states = {v.id: _VehicleState(inst, v) for v in fleet}
    occupancy: dict[tuple[str, int], str] = {
        key: "<reserved>" for key in occupied_slots}
    items_out: list = []
    unassigned: list[str] = []

    for block in todo:
        ranked = []
        for v in fleet:
            st = states[v.id]
            if can_serve(st, inst, v, block):
                ranked.append(
                    (biased_cost(st, inst, v, block, config.wait_penalty), v.id))
        if not ranked:
            unassigned.append(block.id)
            continue
        _, chosen_id = min(ranked)
        st = states[chosen_id]
        st.insert(block)
        items_out.append(BlockAssignment(chosen_id, block.id))

        v = st.vehicle
        if v.is_electric:
            idx = st.items.index(block)
            soc_after = st.trajectory(st.items)[idx]
            if soc_after <= config.soc_threshold(v) + _TOL:
                _assign_charging(st, inst, occupancy, block, items_out)

    return Schedule(items=tuple(items_out), unassigned=tuple(unassigned))
