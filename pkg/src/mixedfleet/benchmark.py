"""Deterministic synthetic scenarios, from enumeration-sized to full-day.

Blocks are laid out on non-overlapping "lanes" so a time-feasible cover
always exists for the generated fleet; geography is a depot plus a ring
of terminals, with hop matrices synthesized from coordinates (great
circle times a circuity factor, which keeps them metric).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence, Union

from .model import (
    ChargingPole,
    FuelFamily,
    Instance,
    Location,
    TimeSlot,
    TransitBlock,
    VehicleSpec,
    build_instance,
)
from .scenario import (
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    tariff_prices,
)

FLAT_PRICE = 0.12795
PEAK_PRICE = 0.14660
PEAK_START = "06:00"
PEAK_END = "22:00"
DIESEL_PRICE = 4.2

DIESEL_MPG = 2.53
EV_MILES_PER_KWH = 0.56


@dataclass(frozen=True)
class SizeSpec:
    blocks: int
    ev_count: int
    diesel_count: int
    poles: int
    day_start: int          # minutes
    day_end: int
    slot_minutes: int
    terminals: int
    battery_kwh: float
    battery_floor_kwh: float
    charger_kwh: float
    ev_eff: float           # miles per kWh
    block_speed_mph: float
    seats_required: int
    # idle window between consecutive blocks on a lane; wide windows leave
    # room for charger visits
    gap_min: int = 20
    gap_max: int = 60
    blocks_per_lane: int = 3


SIZES: dict[str, SizeSpec] = {
    # enumeration-friendly: <=3 vehicles, <=5 blocks, <=4 slots, 1 pole
    "tiny": SizeSpec(blocks=4, ev_count=1, diesel_count=1, poles=1,
                     day_start=6 * 60, day_end=14 * 60, slot_minutes=120,
                     terminals=3, battery_kwh=90.0, battery_floor_kwh=15.0,
                     charger_kwh=40.0, ev_eff=1.0, block_speed_mph=15.0,
                     seats_required=30),
    "small": SizeSpec(blocks=8, ev_count=2, diesel_count=3, poles=1,
                      day_start=5 * 60, day_end=21 * 60, slot_minutes=120,
                      terminals=4, battery_kwh=150.0, battery_floor_kwh=25.0,
                      charger_kwh=60.0, ev_eff=0.8, block_speed_mph=15.0,
                      seats_required=30),
    "medium": SizeSpec(blocks=14, ev_count=3, diesel_count=5, poles=2,
                       day_start=5 * 60, day_end=21 * 60, slot_minutes=120,
                       terminals=5, battery_kwh=200.0, battery_floor_kwh=30.0,
                       charger_kwh=80.0, ev_eff=0.7, block_speed_mph=15.0,
                       seats_required=30),
    "paper": SizeSpec(blocks=42, ev_count=4, diesel_count=31, poles=2,
                      day_start=5 * 60, day_end=23 * 60, slot_minutes=60,
                      terminals=6, battery_kwh=310.0, battery_floor_kwh=46.5,
                      charger_kwh=80.0, ev_eff=EV_MILES_PER_KWH,
                      block_speed_mph=14.0, seats_required=30),
}


def _fmt_min(minutes: int) -> str:
    return f"{minutes // 60:02d}:{minutes % 60:02d}"


def generate_scenario_dict(
    size: Union[str, SizeSpec],
    seed: int,
    tou: bool = False,
    name: Optional[str] = None,
) -> dict:
    """Scenario JSON object for a synthetic day; same inputs, same bytes."""
    spec = SIZES[size] if isinstance(size, str) else size
    rng = random.Random(seed)

    center_lat, center_lon = 35.05, -85.31
    locations = [{"id": "depot", "lat": center_lat, "lon": center_lon}]
    for k in range(spec.terminals):
        angle = 2 * math.pi * k / spec.terminals
        radius = 1.5 + 2.5 * rng.random()  # miles
        locations.append({
            "id": f"term{k}",
            "lat": round(center_lat + radius / 69.0 * math.cos(angle), 6),
            "lon": round(center_lon
                         + radius / (69.0 * math.cos(math.radians(center_lat)))
                         * math.sin(angle), 6),
        })
    terminal_ids = [l["id"] for l in locations[1:]]

    fleet_size = spec.ev_count + spec.diesel_count
    lanes = max(1, min(fleet_size,
                       math.ceil(spec.blocks / spec.blocks_per_lane)))
    day_open = spec.day_start + spec.slot_minutes  # keep slot 0 clear
    horizon = spec.day_end - 30
    cursors = [day_open] * lanes

    blocks = []
    for k in range(spec.blocks):
        lane = k % lanes
        gap = rng.randrange(spec.gap_min, spec.gap_max + 1, 5)
        start = cursors[lane] + gap
        remaining_blocks = max(1, (spec.blocks - k - 1) // lanes)
        max_duration = max(45, (horizon - start) // (remaining_blocks + 1))
        duration = rng.randrange(45, max(50, min(181, max_duration)), 5)
        if start + duration > horizon:
            # lane is full; append to the emptiest lane instead
            lane = cursors.index(min(cursors))
            start = cursors[lane] + spec.gap_min
            duration = 45
            if start + duration > spec.day_end - 10:
                duration = spec.day_end - 10 - start
                if duration < 30:
                    raise ValueError(
                        f"cannot fit {spec.blocks} blocks into the "
                        f"operating day; widen the day or reduce blocks")
        end = start + duration
        cursors[lane] = end
        origin = rng.choice(terminal_ids)
        destination = rng.choice(terminal_ids)
        distance = round(duration / 60.0 * spec.block_speed_mph
                         * (0.85 + 0.3 * rng.random()), 2)
        blocks.append({
            "id": f"b{k:02d}",
            "origin": origin,
            "destination": destination,
            "startTime": _fmt_min(start),
            "endTime": _fmt_min(end),
            "distance": distance,
            "minSeats": spec.seats_required,
        })
    blocks.sort(key=lambda b: (b["startTime"], b["id"]))

    vehicles = []
    for k in range(spec.ev_count):
        vehicles.append({
            "id": f"ev{k:02d}", "modelId": "ev-std", "fuelFamily": "electric",
            "socMin": spec.battery_floor_kwh, "socMax": spec.battery_kwh,
            "opEff": spec.ev_eff, "seats": 35,
        })
    for k in range(spec.diesel_count):
        vehicles.append({
            "id": f"d{k:02d}", "modelId": "diesel-std", "fuelFamily": "diesel",
            "socMin": 0.0, "socMax": round(100 * 37.1, 1),  # 100-gallon tank
            "opEffMpg": DIESEL_MPG, "seats": 38,
        })

    poles = [{"id": f"cp{k}", "location": "depot", "qMax": spec.charger_kwh}
             for k in range(spec.poles)]

    tariff = ({"peakStart": PEAK_START, "peakEnd": PEAK_END,
               "peakPrice": PEAK_PRICE, "offPeakPrice": FLAT_PRICE}
              if tou else {"flat": FLAT_PRICE})

    return {
        "schemaVersion": 1,
        "name": name or f"synthetic-{spec.blocks}blocks-seed{seed}",
        "dayStart": _fmt_min(spec.day_start),
        "dayEnd": _fmt_min(spec.day_end),
        "slotMinutes": spec.slot_minutes,
        "tariff": tariff,
        "dieselPricePerGallon": DIESEL_PRICE,
        "dieselKwhPerGallon": 37.1,
        "locations": locations,
        "vehicles": vehicles,
        "blocks": blocks,
        "poles": poles,
        "speedMph": 20.0,
        "circuityFactor": 1.3,
    }


def generate_instance(size: Union[str, SizeSpec], seed: int,
                      tou: bool = False) -> Instance:
    return scenario_from_dict(generate_scenario_dict(size, seed, tou=tou),
                              source=f"<generated:{size}:{seed}>")


def write_benchmark_files(seed: int, sizes: Sequence[str],
                          out_dir: Union[str, Path]) -> list[Path]:
    """One scenario file per size; deterministic bytes for a given seed."""
    import json

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for size in sizes:
        obj = generate_scenario_dict(size, seed)
        path = out_dir / f"{size}-seed{seed}.json"
        path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
        written.append(path)
    return written


def demotion_fixture() -> Instance:
    """Strict staging fails here until one bus is demoted.

    Three simultaneous morning blocks plus one long afternoon block from
    the same spot; two electric buses cannot chain the two long blocks on
    one battery, and a lone diesel bus cannot cover two simultaneous
    leftovers.
    """
    day_start, day_end = 6 * 60, 14 * 60
    slots = [TimeSlot(i, day_start + 120 * i, day_start + 120 * (i + 1),
                      FLAT_PRICE) for i in range(4)]
    loc = [Location("hub", 35.05, -85.31)]
    blocks = [
        TransitBlock("t1", "hub", "hub", 8 * 60, 10 * 60, 60.0, 0),
        TransitBlock("t2", "hub", "hub", 8 * 60, 10 * 60, 20.0, 0),
        TransitBlock("t3", "hub", "hub", 8 * 60, 10 * 60, 20.0, 0),
        TransitBlock("t4", "hub", "hub", 10 * 60, 12 * 60, 60.0, 0),
    ]
    vehicles = [
        VehicleSpec("ev01", "ev-std", FuelFamily.ELECTRIC, 25.0, 100.0, 1.0, 40),
        VehicleSpec("ev02", "ev-std", FuelFamily.ELECTRIC, 25.0, 100.0, 1.0, 40),
        VehicleSpec("d01", "diesel-std", FuelFamily.DIESEL, 0.0, 3710.0,
                    DIESEL_MPG / 37.1, 40),
    ]
    return build_instance(
        vehicles=vehicles, blocks=blocks, poles=[], slots=slots,
        locations=loc, deadhead_min={}, deadhead_mi={},
        diesel_price_per_gallon=DIESEL_PRICE,
        tariff_spec={"flat": FLAT_PRICE},
        meta={"name": "demotion-fixture"},
    )


SWEEP_PARAMETERS = ("evCount", "batteryKwh", "chargerQmax", "dieselPrice",
                    "evSeats")


def apply_parameter(inst: Instance, parameter: str, value: float) -> Instance:
    """Rebuild an instance with one swept parameter changed.

    ``evCount`` swaps diesel buses for electric ones (templates taken from
    the existing fleet) keeping total fleet size fixed.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ValueError(f"unknown sweep parameter {parameter!r}; "
                         f"expected one of {SWEEP_PARAMETERS}")
    vehicles = list(inst.vehicles)
    if parameter == "evCount":
        k = int(value)
        ev_template = next((v for v in vehicles if v.is_electric), None)
        diesel_template = next((v for v in vehicles if not v.is_electric), None)
        if ev_template is None or diesel_template is None:
            raise ValueError(
                "evCount sweeps need at least one electric and one "
                "diesel-family vehicle as templates")
        total = len(vehicles)
        if not 0 <= k <= total:
            raise ValueError(f"evCount {k} outside fleet size {total}")
        vehicles = (
            [replace(ev_template, id=f"ev{j:02d}") for j in range(k)]
            + [replace(diesel_template, id=f"d{j:02d}")
               for j in range(total - k)]
        )
    elif parameter == "batteryKwh":
        vehicles = [replace(v, soc_max=float(value)) if v.is_electric else v
                    for v in vehicles]
    elif parameter == "evSeats":
        vehicles = [replace(v, seats=int(value)) if v.is_electric else v
                    for v in vehicles]

    poles = list(inst.poles)
    if parameter == "chargerQmax":
        poles = [ChargingPole(p.id, p.location, float(value)) for p in poles]

    diesel_price = (float(value) if parameter == "dieselPrice"
                    else inst.diesel_price_per_gallon)

    return build_instance(
        vehicles=vehicles,
        blocks=inst.blocks,
        poles=poles,
        slots=inst.slots,
        locations=inst.locations,
        deadhead_min=inst.deadhead_min,
        deadhead_mi=inst.deadhead_mi,
        diesel_price_per_gallon=diesel_price,
        diesel_kwh_per_gallon=inst.diesel_kwh_per_gallon,
        op_eff_threshold=None,
        tariff_spec=inst.tariff_spec,
        meta={**inst.meta, "sweep": {parameter: value}},
    )


def with_tariff(inst: Instance, tou: bool) -> Instance:
    """Same day under the standard flat or peak/off-peak tariff."""
    tariff = ({"peakStart": PEAK_START, "peakEnd": PEAK_END,
               "peakPrice": PEAK_PRICE, "offPeakPrice": FLAT_PRICE}
              if tou else {"flat": FLAT_PRICE})
    windows = [(s.start_min, s.end_min) for s in inst.slots]
    prices = tariff_prices(tariff, windows)
    slots = [TimeSlot(s.index, s.start_min, s.end_min, p)
             for s, p in zip(inst.slots, prices)]
    return build_instance(
        vehicles=inst.vehicles, blocks=inst.blocks, poles=inst.poles,
        slots=slots, locations=inst.locations,
        deadhead_min=inst.deadhead_min, deadhead_mi=inst.deadhead_mi,
        diesel_price_per_gallon=inst.diesel_price_per_gallon,
        diesel_kwh_per_gallon=inst.diesel_kwh_per_gallon,
        op_eff_threshold=None, tariff_spec=tariff,
        meta=dict(inst.meta),
    )


__all__ = [
    "SIZES", "SizeSpec", "generate_scenario_dict", "generate_instance",
    "write_benchmark_files", "demotion_fixture", "apply_parameter",
    "with_tariff", "SWEEP_PARAMETERS", "FLAT_PRICE", "PEAK_PRICE",
    "DIESEL_PRICE", "save_scenario", "scenario_to_dict",
]
