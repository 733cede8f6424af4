"""Scenario files: a self-contained JSON description of one day's problem.

The format is strict: unknown fields are rejected and every referenced
location id must be defined.  When explicit deadheads are omitted they are
synthesized from coordinates with a straight-line-times-circuity model.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Optional, Union

from .model import (
    BlockAssignment,
    ChargeAssignment,
    ChargingPole,
    FuelFamily,
    Instance,
    Location,
    Schedule,
    TimeSlot,
    TransitBlock,
    VehicleSpec,
    build_instance,
    energy_for_block,
)

SCHEMA_VERSION = 1

EARTH_RADIUS_MI = 3958.7613

DEFAULT_SPEED_MPH = 20.0
DEFAULT_CIRCUITY = 1.3

_TOP_LEVEL_FIELDS = {
    "schemaVersion", "name", "dayStart", "dayEnd", "slotMinutes", "tariff",
    "dieselPricePerGallon", "dieselKwhPerGallon", "opEffThreshold",
    "locations", "vehicles", "blocks", "poles", "deadheads",
    "speedMph", "circuityFactor",
}
_VEHICLE_FIELDS = {"id", "modelId", "fuelFamily", "socMin", "socMax",
                   "opEff", "opEffMpg", "seats"}
_BLOCK_FIELDS = {"id", "origin", "destination", "startTime", "endTime",
                 "distance", "minSeats"}
_POLE_FIELDS = {"id", "location", "qMax"}
_LOCATION_FIELDS = {"id", "lat", "lon"}
_DEADHEAD_FIELDS = {"from", "to", "minutes", "miles"}
_TARIFF_FLAT_FIELDS = {"flat"}
_TARIFF_TOU_FIELDS = {"peakStart", "peakEnd", "peakPrice", "offPeakPrice"}


class ScenarioError(ValueError):
    """A scenario file violates the schema or references undefined ids."""


def haversine_miles(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in miles."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_MI * math.asin(math.sqrt(a))


def parse_hhmm(value: Union[str, int], field: str) -> int:
    """Accept integer minutes or an HH:MM string (HH may exceed 23)."""
    if isinstance(value, bool):
        raise ScenarioError(f"field {field}: expected time, got boolean")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        parts = value.split(":")
        if len(parts) == 2 and all(p.isdigit() for p in parts):
            return int(parts[0]) * 60 + int(parts[1])
    raise ScenarioError(f"field {field}: cannot parse time {value!r}")


def minutes_to_hhmm(minutes: int) -> str:
    return f"{minutes // 60:02d}:{minutes % 60:02d}"


def _reject_unknown(obj: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ScenarioError(f"{where}: unknown fields {unknown}")


def _require(obj: dict, field: str, where: str) -> Any:
    if field not in obj:
        raise ScenarioError(f"{where}: missing field {field!r}")
    return obj[field]


def tariff_prices(tariff: dict, slots: list[tuple[int, int]]) -> list[float]:
    """Per-slot $/kWh prices from a flat or peak/off-peak tariff spec.

    A slot takes the peak price when its start time falls inside the peak
    window (aligned slot grids make this unambiguous).
    """
    keys = set(tariff)
    if keys == _TARIFF_FLAT_FIELDS:
        price = float(tariff["flat"])
        if price < 0:
            raise ScenarioError("tariff.flat: price must be >= 0")
        return [price] * len(slots)
    if keys == _TARIFF_TOU_FIELDS:
        peak_start = parse_hhmm(tariff["peakStart"], "tariff.peakStart")
        peak_end = parse_hhmm(tariff["peakEnd"], "tariff.peakEnd")
        peak = float(tariff["peakPrice"])
        off = float(tariff["offPeakPrice"])
        if peak < 0 or off < 0:
            raise ScenarioError("tariff: prices must be >= 0")
        return [peak if peak_start <= s0 < peak_end else off for s0, _ in slots]
    raise ScenarioError(
        "tariff: expected exactly {flat} or "
        "{peakStart, peakEnd, peakPrice, offPeakPrice}"
    )


def _parse_vehicle(obj: dict, kwh_per_gal: float) -> VehicleSpec:
    where = f"vehicles[{obj.get('id', '?')}]"
    _reject_unknown(obj, _VEHICLE_FIELDS, where)
    family_raw = _require(obj, "fuelFamily", where)
    try:
        family = FuelFamily(str(family_raw).lower())
    except ValueError:
        raise ScenarioError(f"{where}: fuelFamily must be one of "
                            f"electric/diesel/hybrid, got {family_raw!r}") from None
    if "opEff" in obj and "opEffMpg" in obj:
        raise ScenarioError(f"{where}: give opEff (mi/kWh) or opEffMpg, not both")
    if "opEff" in obj:
        op_eff = float(obj["opEff"])
    elif "opEffMpg" in obj:
        if family.is_electric:
            raise ScenarioError(f"{where}: opEffMpg only applies to diesel-family vehicles")
        op_eff = float(obj["opEffMpg"]) / kwh_per_gal
    else:
        raise ScenarioError(f"{where}: missing field 'opEff' (or 'opEffMpg')")
    try:
        return VehicleSpec(
            id=str(_require(obj, "id", where)),
            model_id=str(_require(obj, "modelId", where)),
            fuel_family=family,
            soc_min=float(_require(obj, "socMin", where)),
            soc_max=float(_require(obj, "socMax", where)),
            op_eff=op_eff,
            seats=int(_require(obj, "seats", where)),
        )
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def _parse_block(obj: dict) -> TransitBlock:
    where = f"blocks[{obj.get('id', '?')}]"
    _reject_unknown(obj, _BLOCK_FIELDS, where)
    try:
        return TransitBlock(
            id=str(_require(obj, "id", where)),
            origin=str(_require(obj, "origin", where)),
            destination=str(_require(obj, "destination", where)),
            start_min=parse_hhmm(_require(obj, "startTime", where), f"{where}.startTime"),
            end_min=parse_hhmm(_require(obj, "endTime", where), f"{where}.endTime"),
            distance_mi=float(_require(obj, "distance", where)),
            min_seats=int(obj.get("minSeats", 0)),
        )
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def load_scenario(path: Union[str, Path]) -> Instance:
    """Load a scenario JSON file into a validated :class:`Instance`."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from None
    return scenario_from_dict(raw, source=str(path))


def scenario_from_dict(raw: dict, source: str = "<scenario>") -> Instance:
    if not isinstance(raw, dict):
        raise ScenarioError(f"{source}: top level must be an object")
    _reject_unknown(raw, _TOP_LEVEL_FIELDS, source)

    version = _require(raw, "schemaVersion", source)
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"{source}: unsupported schemaVersion {version}")

    day_start = parse_hhmm(_require(raw, "dayStart", source), "dayStart")
    day_end = parse_hhmm(_require(raw, "dayEnd", source), "dayEnd")
    slot_minutes = int(_require(raw, "slotMinutes", source))
    if slot_minutes <= 0:
        raise ScenarioError("slotMinutes: must be positive")
    if day_end <= day_start:
        raise ScenarioError("dayEnd must be after dayStart")
    if (day_end - day_start) % slot_minutes != 0:
        raise ScenarioError(
            f"operating day ({day_end - day_start} min) is not a whole "
            f"number of {slot_minutes}-minute slots"
        )

    kwh_per_gal = float(raw.get("dieselKwhPerGallon", 37.1))
    if kwh_per_gal <= 0:
        raise ScenarioError("dieselKwhPerGallon: must be positive")

    tariff = _require(raw, "tariff", source)
    if not isinstance(tariff, dict):
        raise ScenarioError("tariff: must be an object")
    windows = [
        (day_start + i * slot_minutes, day_start + (i + 1) * slot_minutes)
        for i in range((day_end - day_start) // slot_minutes)
    ]
    prices = tariff_prices(tariff, windows)
    slots = [
        TimeSlot(index=i, start_min=w[0], end_min=w[1], price_per_kwh=p)
        for i, (w, p) in enumerate(zip(windows, prices))
    ]

    locations = []
    for obj in raw.get("locations", []):
        _reject_unknown(obj, _LOCATION_FIELDS, f"locations[{obj.get('id', '?')}]")
        locations.append(Location(
            id=str(_require(obj, "id", "locations[]")),
            lat=float(obj["lat"]) if "lat" in obj else None,
            lon=float(obj["lon"]) if "lon" in obj else None,
        ))
    loc_ids = {l.id for l in locations}

    vehicles = [_parse_vehicle(o, kwh_per_gal) for o in _require(raw, "vehicles", source)]
    blocks = [_parse_block(o) for o in _require(raw, "blocks", source)]

    poles = []
    for obj in raw.get("poles", []):
        where = f"poles[{obj.get('id', '?')}]"
        _reject_unknown(obj, _POLE_FIELDS, where)
        try:
            poles.append(ChargingPole(
                id=str(_require(obj, "id", where)),
                location=str(_require(obj, "location", where)),
                q_max_kwh=float(_require(obj, "qMax", where)),
            ))
        except ValueError as exc:
            raise ScenarioError(f"{where}: {exc}") from None

    dangling = sorted(
        {b.origin for b in blocks} | {b.destination for b in blocks}
        | {p.location for p in poles}
    ) if not locations else sorted(
        ({b.origin for b in blocks} | {b.destination for b in blocks}
         | {p.location for p in poles}) - loc_ids
    )
    if locations and dangling:
        raise ScenarioError(f"{source}: undefined location ids {dangling}")
    if not locations:
        # No explicit location table: synthesize bare entries for every id.
        locations = [Location(id=i) for i in dangling]
        loc_ids = {l.id for l in locations}

    for b in blocks:
        if not (day_start <= b.start_min and b.end_min <= day_end):
            raise ScenarioError(
                f"blocks[{b.id}]: window {b.start_min}-{b.end_min} outside "
                f"operating day {day_start}-{day_end}"
            )

    used = sorted({b.origin for b in blocks} | {b.destination for b in blocks}
                  | {p.location for p in poles})

    if "deadheads" in raw:
        dmin: dict[tuple[str, str], int] = {}
        dmi: dict[tuple[str, str], float] = {}
        for obj in raw["deadheads"]:
            _reject_unknown(obj, _DEADHEAD_FIELDS, "deadheads[]")
            a = str(_require(obj, "from", "deadheads[]"))
            b = str(_require(obj, "to", "deadheads[]"))
            if a not in loc_ids or b not in loc_ids:
                raise ScenarioError(f"deadheads[]: undefined location in {a}->{b}")
            dmin[(a, b)] = int(_require(obj, "minutes", "deadheads[]"))
            dmi[(a, b)] = float(_require(obj, "miles", "deadheads[]"))
    else:
        speed = float(raw.get("speedMph", DEFAULT_SPEED_MPH))
        circuity = float(raw.get("circuityFactor", DEFAULT_CIRCUITY))
        if speed <= 0 or circuity <= 0:
            raise ScenarioError("speedMph and circuityFactor must be positive")
        by_id = {l.id: l for l in locations}
        incomplete = sorted(i for i in used
                            if by_id[i].lat is None or by_id[i].lon is None)
        if incomplete:
            raise ScenarioError(
                f"{source}: no deadheads given and locations lack "
                f"coordinates: {incomplete}"
            )
        dmin, dmi = {}, {}
        for a in used:
            for b in used:
                if a == b:
                    dmin[(a, b)], dmi[(a, b)] = 0, 0.0
                    continue
                la, lb = by_id[a], by_id[b]
                miles = haversine_miles(la.lat, la.lon, lb.lat, lb.lon) * circuity
                dmi[(a, b)] = miles
                dmin[(a, b)] = math.ceil(miles / speed * 60)

    threshold = raw.get("opEffThreshold")
    meta = {"name": raw.get("name", ""), "source": source}
    if "deadheads" not in raw:
        meta["deadheadSynthesis"] = {
            "speedMph": float(raw.get("speedMph", DEFAULT_SPEED_MPH)),
            "circuityFactor": float(raw.get("circuityFactor", DEFAULT_CIRCUITY)),
        }

    try:
        return build_instance(
            vehicles=vehicles,
            blocks=blocks,
            poles=poles,
            slots=slots,
            locations=locations,
            deadhead_min=dmin,
            deadhead_mi=dmi,
            diesel_price_per_gallon=float(_require(raw, "dieselPricePerGallon", source)),
            diesel_kwh_per_gallon=kwh_per_gal,
            op_eff_threshold=float(threshold) if threshold is not None else None,
            tariff_spec=tariff,
            meta=meta,
        )
    except ValueError as exc:
        raise ScenarioError(f"{source}: {exc}") from None


def scenario_to_dict(inst: Instance) -> dict:
    """Canonical scenario form; loading it reproduces the instance exactly."""
    slot_minutes = inst.slots[0].minutes
    tariff = inst.tariff_spec
    if tariff is None:
        first = inst.slots[0].price_per_kwh
        if all(s.price_per_kwh == first for s in inst.slots):
            tariff = {"flat": first}
        else:
            raise ValueError("instance has per-slot prices but no tariff spec to emit")
    out: dict[str, Any] = {
        "schemaVersion": SCHEMA_VERSION,
        "name": inst.meta.get("name", ""),
        "dayStart": minutes_to_hhmm(inst.day_start),
        "dayEnd": minutes_to_hhmm(inst.day_end),
        "slotMinutes": slot_minutes,
        "tariff": tariff,
        "dieselPricePerGallon": inst.diesel_price_per_gallon,
        "dieselKwhPerGallon": inst.diesel_kwh_per_gallon,
        "opEffThreshold": inst.op_eff_threshold,
        "locations": [
            {"id": l.id, **({"lat": l.lat} if l.lat is not None else {}),
             **({"lon": l.lon} if l.lon is not None else {})}
            for l in inst.locations
        ],
        "vehicles": [
            {"id": v.id, "modelId": v.model_id, "fuelFamily": v.fuel_family.value,
             "socMin": v.soc_min, "socMax": v.soc_max, "opEff": v.op_eff,
             "seats": v.seats}
            for v in inst.vehicles
        ],
        "blocks": [
            {"id": b.id, "origin": b.origin, "destination": b.destination,
             "startTime": b.start_min, "endTime": b.end_min,
             "distance": b.distance_mi, "minSeats": b.min_seats}
            for b in inst.blocks
        ],
        "poles": [
            {"id": p.id, "location": p.location, "qMax": p.q_max_kwh}
            for p in inst.poles
        ],
        "deadheads": [
            {"from": a, "to": b, "minutes": inst.deadhead_min[(a, b)],
             "miles": inst.deadhead_mi[(a, b)]}
            for (a, b) in sorted(inst.deadhead_min)
        ],
    }
    return out


def save_scenario(inst: Instance, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(inst), indent=2) + "\n")


def validate_instance(inst: Instance) -> list[str]:
    """Pre-solve sanity diagnostics; an empty list means clean.

    Flags blocks nobody can serve (seats or single-charge range), blocks
    that end inside the first slot (their energy would fall outside the
    slot-accounting window) and non-positive data the constructors could
    not rule out.
    """
    diags: list[str] = []
    max_seats = max((v.seats for v in inst.vehicles), default=0)
    for b in inst.blocks:
        if b.min_seats > max_seats:
            diags.append(
                f"block {b.id}: needs {b.min_seats} seats but the largest "
                f"vehicle has {max_seats}"
            )
        eligible = [v for v in inst.vehicles if v.seats >= b.min_seats]
        if eligible and all(
            energy_for_block(v, b) > v.usable_kwh for v in eligible
        ):
            diags.append(
                f"block {b.id}: {b.distance_mi} mi exceeds every eligible "
                f"vehicle's full-charge range"
            )
        if b.end_min <= inst.slots[0].end_min:
            diags.append(
                f"block {b.id}: ends inside the first time slot; its energy "
                f"falls outside slot accounting"
            )
    for (a, c), miles in inst.deadhead_mi.items():
        if miles < 0:
            diags.append(f"deadhead {a}->{c}: negative distance {miles}")
    for (a, c), mins in inst.deadhead_min.items():
        if mins < 0:
            diags.append(f"deadhead {a}->{c}: negative duration {mins}")
    return diags


# ---------------------------------------------------------------------------
# Schedule (de)serialization

SCHEDULE_SCHEMA_VERSION = 1


def schedule_to_dict(schedule: Schedule, config: Optional[dict] = None) -> dict:
    items = []
    for it in schedule.items:
        if isinstance(it, BlockAssignment):
            items.append({"type": "block", "vehicle": it.vehicle_id,
                          "block": it.block_id})
        else:
            items.append({"type": "charge", "vehicle": it.vehicle_id,
                          "pole": it.pole_id, "slot": it.slot_index,
                          "chargeKwh": it.charge_kwh})
    out = {"schemaVersion": SCHEDULE_SCHEMA_VERSION, "items": items,
           "unassigned": list(schedule.unassigned)}
    if config is not None:
        out["config"] = config
    return out


def schedule_from_dict(raw: dict) -> Schedule:
    if raw.get("schemaVersion") != SCHEDULE_SCHEMA_VERSION:
        raise ScenarioError(
            f"schedule: unsupported schemaVersion {raw.get('schemaVersion')}")
    items: list = []
    for obj in raw.get("items", []):
        kind = obj.get("type")
        if kind == "block":
            items.append(BlockAssignment(str(obj["vehicle"]), str(obj["block"])))
        elif kind == "charge":
            items.append(ChargeAssignment(
                str(obj["vehicle"]), str(obj["pole"]),
                int(obj["slot"]), float(obj["chargeKwh"])))
        else:
            raise ScenarioError(f"schedule item: unknown type {kind!r}")
    return Schedule(items=tuple(items),
                    unassigned=tuple(str(u) for u in raw.get("unassigned", [])))


def load_schedule(path: Union[str, Path]) -> Schedule:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from None
    return schedule_from_dict(raw)


def save_schedule(schedule: Schedule, path: Union[str, Path],
                  config: Optional[dict] = None) -> None:
    Path(path).write_text(
        json.dumps(schedule_to_dict(schedule, config), indent=2) + "\n")
