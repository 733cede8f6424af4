"""Domain model for single-day mixed-fleet bus scheduling.

Unit conventions used everywhere in this package:

* energy      -- kWh-equivalent (diesel fuel converted at a configurable
                 kWh-per-gallon factor, default 37.1)
* distance    -- miles
* time        -- integer minutes from midnight of the service day
* money       -- dollars
* efficiency  -- miles per kWh-equivalent (higher is more efficient)

All types are immutable after construction and safe for concurrent reads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping, Optional, Union

DIESEL_KWH_PER_GALLON = 37.1

# Comparison tolerance for energies and money.
NUMERIC_TOL = 1e-6


class FuelFamily(str, Enum):
    ELECTRIC = "electric"
    DIESEL = "diesel"
    HYBRID = "hybrid"

    @property
    def is_electric(self) -> bool:
        return self is FuelFamily.ELECTRIC

    @property
    def uses_diesel(self) -> bool:
        # Hybrids refuel with diesel and never occupy a charger.
        return not self.is_electric


def gallons_to_kwh(gallons: float, kwh_per_gallon: float = DIESEL_KWH_PER_GALLON) -> float:
    """Convert gallons of diesel to kWh-equivalent."""
    if kwh_per_gallon <= 0:
        raise ValueError("kwh_per_gallon must be positive")
    return gallons * kwh_per_gallon


def kwh_to_gallons(kwh: float, kwh_per_gallon: float = DIESEL_KWH_PER_GALLON) -> float:
    """Convert kWh-equivalent back to gallons of diesel."""
    if kwh_per_gallon <= 0:
        raise ValueError("kwh_per_gallon must be positive")
    return kwh / kwh_per_gallon


@dataclass(frozen=True)
class VehicleSpec:
    """A single bus: energy window, efficiency and seating."""

    id: str
    model_id: str
    fuel_family: FuelFamily
    soc_min: float  # kWh-equivalent floor the bus may never go below
    soc_max: float  # kWh-equivalent capacity (battery or converted tank)
    op_eff: float   # miles per kWh-equivalent
    seats: int

    def __post_init__(self) -> None:
        if not 0 <= self.soc_min < self.soc_max:
            raise ValueError(
                f"vehicle {self.id}: require 0 <= soc_min < soc_max "
                f"(got {self.soc_min}, {self.soc_max})"
            )
        if self.op_eff <= 0:
            raise ValueError(f"vehicle {self.id}: op_eff must be positive")
        if self.seats < 0:
            raise ValueError(f"vehicle {self.id}: seats must be >= 0")

    @property
    def is_electric(self) -> bool:
        return self.fuel_family.is_electric

    @property
    def usable_kwh(self) -> float:
        return self.soc_max - self.soc_min


@dataclass(frozen=True)
class Location:
    id: str
    lat: Optional[float] = None
    lon: Optional[float] = None


@dataclass(frozen=True)
class TransitBlock:
    """A day-long chain of revenue trips served by one vehicle."""

    id: str
    origin: str       # location id
    destination: str  # location id
    start_min: int
    end_min: int
    distance_mi: float
    min_seats: int = 0

    def __post_init__(self) -> None:
        if self.start_min >= self.end_min:
            raise ValueError(f"block {self.id}: start must precede end")
        if self.distance_mi < 0:
            raise ValueError(f"block {self.id}: distance must be >= 0")
        if self.min_seats < 0:
            raise ValueError(f"block {self.id}: min_seats must be >= 0")


@dataclass(frozen=True)
class TimeSlot:
    index: int
    start_min: int
    end_min: int
    price_per_kwh: float

    def __post_init__(self) -> None:
        if self.start_min >= self.end_min:
            raise ValueError(f"slot {self.index}: start must precede end")
        if self.price_per_kwh < 0:
            raise ValueError(f"slot {self.index}: price must be >= 0")

    @property
    def minutes(self) -> int:
        return self.end_min - self.start_min


@dataclass(frozen=True)
class ChargingPole:
    id: str
    location: str   # location id
    q_max_kwh: float  # max energy deliverable in one slot (unidirectional)

    def __post_init__(self) -> None:
        if self.q_max_kwh <= 0:
            raise ValueError(f"pole {self.id}: q_max_kwh must be positive")


@dataclass(frozen=True)
class ChargingSlot:
    """One (pole, time-slot) pair, occupiable by at most one electric bus."""

    pole: ChargingPole
    slot: TimeSlot

    @property
    def start_min(self) -> int:
        return self.slot.start_min

    @property
    def end_min(self) -> int:
        return self.slot.end_min

    @property
    def location(self) -> str:
        return self.pole.location

    @property
    def key(self) -> tuple:
        return ("c", self.pole.id, self.slot.index)


Item = Union[TransitBlock, ChargingSlot]


def item_key(x: Item) -> tuple:
    """Stable hashable identity for a block or charging slot."""
    if isinstance(x, TransitBlock):
        return ("t", x.id)
    return x.key


def item_start(x: Item) -> int:
    return x.start_min if isinstance(x, TransitBlock) else x.slot.start_min


def item_end(x: Item) -> int:
    return x.end_min if isinstance(x, TransitBlock) else x.slot.end_min


def item_start_location(x: Item) -> str:
    return x.origin if isinstance(x, TransitBlock) else x.location


def item_end_location(x: Item) -> str:
    return x.destination if isinstance(x, TransitBlock) else x.location


def item_sort_key(x: Item) -> tuple:
    return (item_start(x), item_end(x), item_key(x))


@dataclass(frozen=True)
class Instance:
    """One day's problem: fleet, blocks, chargers, tariff and deadheads.

    Construct through :func:`build_instance`, which validates invariants
    and fills defaults.
    """

    vehicles: tuple[VehicleSpec, ...]
    blocks: tuple[TransitBlock, ...]
    poles: tuple[ChargingPole, ...]
    slots: tuple[TimeSlot, ...]
    locations: tuple[Location, ...]
    deadhead_min: Mapping[tuple[str, str], int]
    deadhead_mi: Mapping[tuple[str, str], float]
    diesel_price_per_gallon: float
    diesel_kwh_per_gallon: float = DIESEL_KWH_PER_GALLON
    op_eff_threshold: float = math.inf
    tariff_spec: Optional[dict] = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def day_start(self) -> int:
        return self.slots[0].start_min

    @property
    def day_end(self) -> int:
        return self.slots[-1].end_min

    @property
    def last_slot(self) -> TimeSlot:
        return self.slots[-1]

    def vehicle(self, vehicle_id: str) -> VehicleSpec:
        return self._vehicle_index[vehicle_id]

    def block(self, block_id: str) -> TransitBlock:
        return self._block_index[block_id]

    def pole(self, pole_id: str) -> ChargingPole:
        return self._pole_index[pole_id]

    def charging_slots(self) -> tuple[ChargingSlot, ...]:
        return tuple(ChargingSlot(cp, s) for cp in self.poles for s in self.slots)

    def electric_vehicles(self) -> tuple[VehicleSpec, ...]:
        return tuple(v for v in self.vehicles if v.is_electric)

    def with_vehicles(self, vehicles: Iterable[VehicleSpec]) -> "Instance":
        return replace(self, vehicles=tuple(vehicles))

    def with_blocks(self, blocks: Iterable[TransitBlock]) -> "Instance":
        return replace(self, blocks=tuple(blocks))

    # Lookup tables are built lazily; object.__setattr__ is the standard
    # escape hatch for caching on frozen dataclasses.
    @property
    def _vehicle_index(self) -> dict[str, VehicleSpec]:
        try:
            return object.__getattribute__(self, "_veh_idx")
        except AttributeError:
            idx = {v.id: v for v in self.vehicles}
            object.__setattr__(self, "_veh_idx", idx)
            return idx

    @property
    def _block_index(self) -> dict[str, TransitBlock]:
        try:
            return object.__getattribute__(self, "_blk_idx")
        except AttributeError:
            idx = {b.id: b for b in self.blocks}
            object.__setattr__(self, "_blk_idx", idx)
            return idx

    @property
    def _pole_index(self) -> dict[str, ChargingPole]:
        try:
            return object.__getattribute__(self, "_pol_idx")
        except AttributeError:
            idx = {p.id: p for p in self.poles}
            object.__setattr__(self, "_pol_idx", idx)
            return idx


class UnknownLocationPairError(ValueError):
    """A deadhead lookup hit a pair absent from the instance matrices."""


def build_instance(
    vehicles: Iterable[VehicleSpec],
    blocks: Iterable[TransitBlock],
    poles: Iterable[ChargingPole],
    slots: Iterable[TimeSlot],
    locations: Iterable[Location],
    deadhead_min: Mapping[tuple[str, str], int],
    deadhead_mi: Mapping[tuple[str, str], float],
    diesel_price_per_gallon: float,
    diesel_kwh_per_gallon: float = DIESEL_KWH_PER_GALLON,
    op_eff_threshold: Optional[float] = None,
    tariff_spec: Optional[dict] = None,
    meta: Optional[dict] = None,
) -> Instance:
    """Validate and assemble an :class:`Instance`.

    Checks id uniqueness, slot grid regularity and deadhead-matrix totality
    over every location pair that blocks or poles can reference.  The
    efficiency threshold defaults to the least-efficient electric vehicle.
    """
    vehicles = tuple(vehicles)
    blocks = tuple(blocks)
    poles = tuple(poles)
    slots = tuple(sorted(slots, key=lambda s: s.index))
    locations = tuple(locations)

    for name, ids in (
        ("vehicle", [v.id for v in vehicles]),
        ("block", [b.id for b in blocks]),
        ("pole", [p.id for p in poles]),
        ("location", [l.id for l in locations]),
    ):
        if len(ids) != len(set(ids)):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate {name} ids: {dupes}")

    if not slots:
        raise ValueError("instance needs at least one time slot")
    length = slots[0].minutes
    for i, s in enumerate(slots):
        if s.index != i:
            raise ValueError(f"slot indices must be 0..n-1 (got {s.index} at {i})")
        if s.minutes != length:
            raise ValueError("time slots must have uniform length")
        if i > 0 and s.start_min != slots[i - 1].end_min:
            raise ValueError("time slots must be contiguous")

    known = {l.id for l in locations}
    used = set()
    for b in blocks:
        used.add(b.origin)
        used.add(b.destination)
    for p in poles:
        used.add(p.location)
    missing = sorted(used - known)
    if missing:
        raise ValueError(f"locations referenced but not defined: {missing}")

    dmin = dict(deadhead_min)
    dmi = dict(deadhead_mi)
    for l in used:
        dmin.setdefault((l, l), 0)
        dmi.setdefault((l, l), 0.0)
    holes = sorted(
        f"{a}->{b}" for a in used for b in used
        if (a, b) not in dmin or (a, b) not in dmi
    )
    if holes:
        raise ValueError(f"deadhead matrices missing pairs: {holes}")
    for (a, b), v in dmin.items():
        if a == b and (v != 0 or dmi[(a, b)] != 0.0):
            raise ValueError(f"self deadhead for {a} must be zero")

    if op_eff_threshold is None:
        electric = [v.op_eff for v in vehicles if v.is_electric]
        op_eff_threshold = min(electric) if electric else math.inf

    return Instance(
        vehicles=vehicles,
        blocks=blocks,
        poles=poles,
        slots=slots,
        locations=locations,
        deadhead_min=dmin,
        deadhead_mi=dmi,
        diesel_price_per_gallon=diesel_price_per_gallon,
        diesel_kwh_per_gallon=diesel_kwh_per_gallon,
        op_eff_threshold=op_eff_threshold,
        tariff_spec=tariff_spec,
        meta=dict(meta or {}),
    )


# ---------------------------------------------------------------------------
# Primitive operations


def deadhead_minutes(inst: Instance, loc1: str, loc2: str) -> int:
    if loc1 == loc2:
        return 0
    try:
        return inst.deadhead_min[(loc1, loc2)]
    except KeyError:
        raise UnknownLocationPairError(f"no deadhead duration for {loc1}->{loc2}") from None


def deadhead_miles(inst: Instance, loc1: str, loc2: str) -> float:
    if loc1 == loc2:
        return 0.0
    try:
        return inst.deadhead_mi[(loc1, loc2)]
    except KeyError:
        raise UnknownLocationPairError(f"no deadhead distance for {loc1}->{loc2}") from None


def feasible_pair(inst: Instance, vehicle: VehicleSpec, x1: Item, x2: Item) -> bool:
    """Timing feasibility of serving ``x1`` then ``x2`` back to back.

    ``x1`` must start no later than ``x2``.  The connecting trip must fit
    in the gap: end(x1) + travel <= start(x2).  Seating and energy are
    checked elsewhere; the predicate is identical for every vehicle and
    the ``vehicle`` argument exists only for call-site symmetry.
    """
    del vehicle
    if item_start(x1) > item_start(x2):
        raise ValueError("feasible_pair expects x1 to start no later than x2")
    travel = deadhead_minutes(inst, item_end_location(x1), item_start_location(x2))
    return item_end(x1) + travel <= item_start(x2)


def energy_for_block(vehicle: VehicleSpec, block: TransitBlock) -> float:
    """kWh-equivalent consumed serving one block: distance / efficiency."""
    return block.distance_mi / vehicle.op_eff


def energy_for_deadhead(inst: Instance, vehicle: VehicleSpec, loc1: str, loc2: str) -> float:
    """kWh-equivalent consumed travelling empty between two locations."""
    if loc1 == loc2:
        return 0.0
    return deadhead_miles(inst, loc1, loc2) / vehicle.op_eff


def slot_of(inst: Instance, minutes: int) -> TimeSlot:
    """Slot covering a time; boundaries belong to the slot they open."""
    if minutes < inst.day_start or minutes >= inst.day_end:
        raise ValueError(
            f"time {minutes} outside operating day "
            f"[{inst.day_start}, {inst.day_end})"
        )
    idx = (minutes - inst.day_start) // inst.slots[0].minutes
    return inst.slots[idx]


def price_at(inst: Instance, slot_index: int) -> float:
    if not 0 <= slot_index < len(inst.slots):
        raise ValueError(f"slot index {slot_index} out of range")
    return inst.slots[slot_index].price_per_kwh


def accounting_slot_index(inst: Instance, minute: int) -> Optional[int]:
    """Slot whose energy ledger absorbs an event at ``minute``.

    Events are booked into the slot (start, end] so an event on a boundary
    belongs to the slot it closes.  The first slot's balance is pinned to
    a full charge, so events there (or at the day open) have no ledger
    slot and return None; :func:`mixedfleet.scenario.validate_instance`
    flags blocks that would land there.
    """
    if minute <= inst.slots[0].end_min:
        return None
    if minute > inst.day_end:
        raise ValueError(f"event time {minute} beyond operating day")
    return (minute - 1 - inst.day_start) // inst.slots[0].minutes


def can_seat(vehicle: VehicleSpec, block: TransitBlock) -> bool:
    return vehicle.seats >= block.min_seats


def replenish_cost(inst: Instance, vehicle: VehicleSpec, end_soc: float) -> float:
    """Cost of restoring a vehicle to full at the end of the day.

    Electric buses recharge at the last slot's tariff; diesel-family buses
    refuel at the configured pump price.
    """
    if not vehicle.soc_min - NUMERIC_TOL <= end_soc <= vehicle.soc_max + NUMERIC_TOL:
        raise ValueError(
            f"end_soc {end_soc} outside [{vehicle.soc_min}, {vehicle.soc_max}] "
            f"for vehicle {vehicle.id}"
        )
    deficit = max(0.0, vehicle.soc_max - end_soc)
    if vehicle.is_electric:
        return deficit * inst.last_slot.price_per_kwh
    gallons = kwh_to_gallons(deficit, inst.diesel_kwh_per_gallon)
    return gallons * inst.diesel_price_per_gallon


# ---------------------------------------------------------------------------
# Schedules


@dataclass(frozen=True)
class BlockAssignment:
    vehicle_id: str
    block_id: str


@dataclass(frozen=True)
class ChargeAssignment:
    vehicle_id: str
    pole_id: str
    slot_index: int
    charge_kwh: float


ScheduleItem = Union[BlockAssignment, ChargeAssignment]


@dataclass(frozen=True)
class Schedule:
    """A set of block and charging assignments for one day.

    ``unassigned`` lists block ids a heuristic failed to place; a complete
    schedule has it empty.  Deadheads, slot costs and energy trajectories
    are derived, not stored; see :mod:`mixedfleet.validator`.
    """

    items: tuple[ScheduleItem, ...]
    unassigned: tuple[str, ...] = ()

    @property
    def block_assignments(self) -> tuple[BlockAssignment, ...]:
        return tuple(i for i in self.items if isinstance(i, BlockAssignment))

    @property
    def charge_assignments(self) -> tuple[ChargeAssignment, ...]:
        return tuple(i for i in self.items if isinstance(i, ChargeAssignment))

    def vehicles_used(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for i in self.items:
            seen.setdefault(i.vehicle_id, None)
        return tuple(seen)

    def items_for(self, inst: Instance, vehicle_id: str) -> list[Item]:
        """The vehicle's blocks and charging slots, sorted by start time."""
        out: list[Item] = []
        for i in self.items:
            if i.vehicle_id != vehicle_id:
                continue
            if isinstance(i, BlockAssignment):
                out.append(inst.block(i.block_id))
            else:
                out.append(ChargingSlot(inst.pole(i.pole_id), inst.slots[i.slot_index]))
        out.sort(key=item_sort_key)
        return out
