"""Build transit blocks from a GTFS subset (trips, stop_times, stops).

Only the pieces needed to recover per-block windows and distances are
read.  Distances come from shapes.txt when present, otherwise from the
stop-to-stop straight-line chain scaled by a circuity factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Union

import pandas as pd

from .model import TransitBlock
from .scenario import DEFAULT_CIRCUITY, haversine_miles


class GtfsError(ValueError):
    """The feed subset is malformed for block extraction."""


@dataclass(frozen=True)
class GtfsSubset:
    trips: pd.DataFrame
    stop_times: pd.DataFrame
    stops: pd.DataFrame
    shapes: Optional[pd.DataFrame] = None
    calendar: Optional[pd.DataFrame] = None


def load_gtfs(directory: Union[str, Path]) -> GtfsSubset:
    """Read the required GTFS tables from a directory of .txt files."""
    directory = Path(directory)

    def read(name: str, required: bool) -> Optional[pd.DataFrame]:
        path = directory / f"{name}.txt"
        if not path.exists():
            if required:
                raise GtfsError(f"missing required GTFS table {name}.txt")
            return None
        return pd.read_csv(path, dtype=str)

    return GtfsSubset(
        trips=read("trips", True),
        stop_times=read("stop_times", True),
        stops=read("stops", True),
        shapes=read("shapes", False),
        calendar=read("calendar", False),
    )


def parse_gtfs_time(value: str) -> int:
    """HH:MM:SS (hours may exceed 23) to minutes from midnight."""
    parts = str(value).strip().split(":")
    if len(parts) not in (2, 3) or not all(p.isdigit() for p in parts):
        raise GtfsError(f"cannot parse GTFS time {value!r}")
    minutes = int(parts[0]) * 60 + int(parts[1])
    if len(parts) == 3:
        minutes += round(int(parts[2]) / 60)
    return minutes


_WEEKDAYS = ["monday", "tuesday", "wednesday", "thursday",
             "friday", "saturday", "sunday"]


def _active_services(calendar: pd.DataFrame, service_date: str) -> set[str]:
    import datetime as _dt

    day = _dt.datetime.strptime(service_date, "%Y%m%d").date()
    column = _WEEKDAYS[day.weekday()]
    active = set()
    for _, row in calendar.iterrows():
        if str(row.get(column, "0")) != "1":
            continue
        if str(row["start_date"]) <= service_date <= str(row["end_date"]):
            active.add(str(row["service_id"]))
    return active


def _shape_length_miles(shapes: pd.DataFrame, shape_id: str) -> Optional[float]:
    pts = shapes[shapes["shape_id"] == shape_id]
    if pts.empty:
        return None
    pts = pts.assign(_seq=pts["shape_pt_sequence"].astype(int)).sort_values("_seq")
    lats = pts["shape_pt_lat"].astype(float).to_numpy()
    lons = pts["shape_pt_lon"].astype(float).to_numpy()
    total = 0.0
    for i in range(1, len(lats)):
        total += haversine_miles(lats[i - 1], lons[i - 1], lats[i], lons[i])
    return total


def blocks_from_gtfs(
    gtfs: GtfsSubset,
    service_date: Optional[str] = None,
    min_seats: int = 30,
    seat_overrides: Optional[Mapping[str, int]] = None,
    circuity_factor: float = DEFAULT_CIRCUITY,
) -> list[TransitBlock]:
    """Group trips by block_id into :class:`TransitBlock` records.

    ``service_date`` (YYYYMMDD) filters trips through calendar.txt when the
    table is present.  Trips inside one block must not overlap in time.
    """
    trips = gtfs.trips
    if service_date is not None and gtfs.calendar is not None:
        active = _active_services(gtfs.calendar, service_date)
        trips = trips[trips["service_id"].astype(str).isin(active)]
    if "block_id" not in trips.columns:
        raise GtfsError("trips.txt lacks block_id; cannot form blocks")
    trips = trips[trips["block_id"].notna() & (trips["block_id"].astype(str) != "")]
    if trips.empty:
        return []

    st = gtfs.stop_times.copy()
    st["stop_sequence"] = st["stop_sequence"].astype(int)
    missing_trips = set(st["trip_id"].astype(str)) - set(
        gtfs.stop_times["trip_id"].astype(str))
    del missing_trips  # trip ids in stop_times are authoritative below

    stops = gtfs.stops.set_index(gtfs.stops["stop_id"].astype(str))
    st_by_trip = dict(tuple(st.groupby(st["trip_id"].astype(str))))

    overrides = dict(seat_overrides or {})
    blocks: list[TransitBlock] = []
    for block_id, group in sorted(trips.groupby(trips["block_id"].astype(str))):
        spans = []
        for trip_id in group["trip_id"].astype(str):
            if trip_id not in st_by_trip:
                raise GtfsError(f"trip {trip_id} has no stop_times rows")
            rows = st_by_trip[trip_id].sort_values("stop_sequence")
            start = parse_gtfs_time(rows.iloc[0]["departure_time"])
            end = parse_gtfs_time(rows.iloc[-1]["arrival_time"])
            shape_id = None
            if gtfs.shapes is not None:
                trip_row = group[group["trip_id"].astype(str) == trip_id].iloc[0]
                shape_id = trip_row.get("shape_id")
                if pd.isna(shape_id):
                    shape_id = None
            if shape_id is not None:
                dist = _shape_length_miles(gtfs.shapes, str(shape_id))
            else:
                dist = None
            if dist is None:
                stop_ids = rows["stop_id"].astype(str).tolist()
                dist = 0.0
                for a, b in zip(stop_ids, stop_ids[1:]):
                    sa, sb = stops.loc[a], stops.loc[b]
                    dist += haversine_miles(
                        float(sa["stop_lat"]), float(sa["stop_lon"]),
                        float(sb["stop_lat"]), float(sb["stop_lon"]))
                dist *= circuity_factor
            first_stop = str(rows.iloc[0]["stop_id"])
            last_stop = str(rows.iloc[-1]["stop_id"])
            spans.append((start, end, first_stop, last_stop, dist, trip_id))

        spans.sort()
        for (s1, e1, *_, t1), (s2, e2, *_, t2) in zip(spans, spans[1:]):
            if s2 < e1:
                raise GtfsError(
                    f"block {block_id}: trips {t1} and {t2} overlap in time")
        blocks.append(TransitBlock(
            id=str(block_id),
            origin=spans[0][2],
            destination=spans[-1][3],
            start_min=spans[0][0],
            end_min=spans[-1][1],
            distance_mi=sum(s[4] for s in spans),
            min_seats=int(overrides.get(str(block_id), min_seats)),
        ))
    return blocks
