"""Origin-destination demand: trip ingestion, per-slot request model, path objective."""
from __future__ import annotations

import csv
import io
import logging
import math
import os
from dataclasses import dataclass, field
from datetime import datetime
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .grid import RoadGraph

log = logging.getLogger(__name__)

CSV_COLUMNS = ["pickup_datetime", "pickup_lat", "pickup_lon",
               "dropoff_lat", "dropoff_lon", "passenger_count"]
MODEL_COLUMNS = ["slot", "origin", "dest", "weight"]
ORDER_COLUMNS = ["o_t", "o_s", "o_d", "passengers"]


class FormatError(ValueError):
    """Input file does not follow the expected CSV layout."""


class EmptyModelError(ValueError):
    pass


@dataclass(frozen=True)
class TripRecord:
    pickup_time: datetime
    pickup_lat: float
    pickup_lon: float
    dropoff_lat: float
    dropoff_lon: float
    passenger_count: int = 1


@dataclass(frozen=True)
class RideOrder:
    o_s: int
    o_d: int
    o_t: datetime
    passengers: int = 1


def _valid_coord(lat: float, lon: float) -> bool:
    return (math.isfinite(lat) and math.isfinite(lon)
            and -90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0)


def _parse_row(row: Sequence[str]) -> TripRecord:
    if len(row) != len(CSV_COLUMNS):
        raise ValueError("wrong column count")
    t = datetime.fromisoformat(row[0].strip())
    plat, plon, dlat, dlon = (float(x) for x in row[1:5])
    pc = int(row[5])
    if not (_valid_coord(plat, plon) and _valid_coord(dlat, dlon)):
        raise ValueError("coordinate out of range")
    if pc < 1:
        raise ValueError("passenger_count must be >= 1")
    return TripRecord(t, plat, plon, dlat, dlon, pc)


def ingest_trips(source) -> tuple[list[TripRecord], int]:
    """Parse trip CSV rows; returns ``(records, skipped)``.

    ``source`` is a path or an open text stream. Malformed rows are skipped and
    counted. A missing or wrong header, or more than half the rows malformed,
    raises ``FormatError``.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="") as fh:
            return ingest_trips(fh)
    reader = csv.reader(source)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != CSV_COLUMNS:
        raise FormatError(f"expected header {','.join(CSV_COLUMNS)}, got {header}")
    records, skipped = [], 0
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        try:
            records.append(_parse_row(row))
        except ValueError:
            skipped += 1
    total = len(records) + skipped
    if total and skipped * 2 > total:
        raise FormatError(f"{skipped} of {total} rows malformed")
    if skipped:
        log.info("skipped %d malformed rows out of %d", skipped, total)
    return records, skipped


def _tile_index(x: float, lo: float, step: float, count: int) -> int:
    # 1-based tile index; a point on a shared border goes to the lower tile
    u = (x - lo) / step
    r = round(u)
    idx = int(r) if abs(u - r) < 1e-9 else math.ceil(u)
    return min(max(idx, 1), count)


def assign_cell(g: RoadGraph, lat: float, lon: float) -> int | None:
    """Id of the tile containing the point, or ``None`` outside the bbox."""
    b = g.bbox
    if b is None or g.nrows is None:
        raise ValueError("graph has no bounding box to bucket points into")
    if not (b.min_lat <= lat <= b.max_lat and b.min_lon <= lon <= b.max_lon):
        return None
    r = _tile_index(lat, b.min_lat, (b.max_lat - b.min_lat) / g.nrows, g.nrows)
    c = _tile_index(lon, b.min_lon, (b.max_lon - b.min_lon) / g.ncols, g.ncols)
    return (r - 1) * g.ncols + c


def slot_of(t: datetime, slot_minutes: int) -> int:
    return (t.hour * 60 + t.minute) // slot_minutes


@dataclass(frozen=True)
class ODDemandModel:
    """Expected request counts ``w(slot, origin, dest)``; absent keys are zero."""

    n: int
    slot_minutes: int
    weights: Mapping[tuple[int, int, int], float]
    train_start: datetime | None = None
    train_end: datetime | None = None
    train_days: int = 0
    _dense: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.slot_minutes < 1 or 1440 % self.slot_minutes:
            raise ValueError("slot_minutes must divide 1440")
        clean = {}
        for (s, i, j), w in self.weights.items():
            if w < 0:
                raise ValueError(f"negative weight at {(s, i, j)}")
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise ValueError(f"cell out of range at {(s, i, j)}")
            if w > 0:
                clean[(int(s), int(i), int(j))] = float(w)
        object.__setattr__(self, "weights", MappingProxyType(clean))

    @property
    def slots_per_day(self) -> int:
        return 1440 // self.slot_minutes

    def matrix(self, slot: int) -> np.ndarray:
        """Dense ``(n+1, n+1)`` weight matrix for one slot, indexed by cell id."""
        W = self._dense.get(slot)
        if W is None:
            W = np.zeros((self.n + 1, self.n + 1))
            for (s, i, j), w in self.weights.items():
                if s == slot:
                    W[i, j] = w
            W.setflags(write=False)
            self._dense[slot] = W
        return W

    def slot_for(self, t: datetime) -> int:
        return slot_of(t, self.slot_minutes)


def expected_requests(m: ODDemandModel, i: int, j: int, slot: int) -> float:
    return m.weights.get((slot, i, j), 0.0)


def node_demand(m: ODDemandModel, i: int, slot: int) -> float:
    """Total expected requests leaving cell ``i``."""
    return float(m.matrix(slot)[i].sum())


def path_expected_requests(m: ODDemandModel, path: Sequence[int], slot: int) -> float:
    """Requests from every path cell to every later cell on the path."""
    return kernels.path_objective(m.matrix(slot), path)


def model_from_orders(orders: Iterable[RideOrder], n: int, slot_minutes: int,
                      days: int = 1, **meta) -> ODDemandModel:
    """Mean per-day count of orders per (slot-of-day, origin, dest)."""
    counts: dict[tuple[int, int, int], float] = {}
    for o in orders:
        key = (slot_of(o.o_t, slot_minutes), o.o_s, o.o_d)
        counts[key] = counts.get(key, 0.0) + 1.0
    return ODDemandModel(n, slot_minutes, {k: c / days for k, c in counts.items()},
                         train_days=days, **meta)


def to_orders(records: Iterable[TripRecord], g: RoadGraph) -> tuple[list[RideOrder], int]:
    """Bucket records into cells; drops out-of-bounds and same-cell trips."""
    out, dropped = [], 0
    for r in records:
        s = assign_cell(g, r.pickup_lat, r.pickup_lon)
        d = assign_cell(g, r.dropoff_lat, r.dropoff_lon)
        if s is None or d is None or s == d:
            dropped += 1
            continue
        out.append(RideOrder(s, d, r.pickup_time, r.passenger_count))
    return out, dropped


def build_demand_model(records: Sequence[TripRecord], g: RoadGraph, slot_minutes: int = 15,
                       train_fraction: float = 0.75) -> tuple[ODDemandModel, list[RideOrder]]:
    """Chronological train/test split; the train part becomes per-slot daily means."""
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie in (0, 1)")
    if slot_minutes < 1 or 1440 % slot_minutes:
        raise ValueError("slot_minutes must divide 1440")
    orders, dropped = to_orders(records, g)
    if dropped:
        log.info("dropped %d out-of-bounds or same-cell trips", dropped)
    if not orders:
        raise EmptyModelError("no usable trips to build a demand model from")
    # full key so ties at the cut do not depend on input order
    orders.sort(key=lambda o: (o.o_t, o.o_s, o.o_d, o.passengers))
    cut = int(len(orders) * train_fraction)
    train, test = orders[:cut], orders[cut:]
    if not train:
        raise EmptyModelError("training split is empty")
    days = (train[-1].o_t.date() - train[0].o_t.date()).days + 1
    model = model_from_orders(train, g.n, slot_minutes, days,
                              train_start=train[0].o_t, train_end=train[-1].o_t)
    return model, test


def write_model(m: ODDemandModel, dest) -> None:
    """Sparse CSV ``slot,origin,dest,weight`` sorted by key."""
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="") as fh:
            return write_model(m, fh)
    w = csv.writer(dest, lineterminator="\n")
    w.writerow(MODEL_COLUMNS)
    for (s, i, j) in sorted(m.weights):
        w.writerow([s, i, j, repr(m.weights[(s, i, j)])])


def read_model(source, n: int, slot_minutes: int, **meta) -> ODDemandModel:
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="") as fh:
            return read_model(fh, n, slot_minutes, **meta)
    reader = csv.reader(source)
    if next(reader, None) != MODEL_COLUMNS:
        raise FormatError(f"expected header {','.join(MODEL_COLUMNS)}")
    weights = {}
    for row in reader:
        if not row:
            continue
        try:
            weights[(int(row[0]), int(row[1]), int(row[2]))] = float(row[3])
        except (ValueError, IndexError) as e:
            raise FormatError(f"bad model row {row}") from e
    return ODDemandModel(n, slot_minutes, weights, **meta)


def write_orders(orders: Iterable[RideOrder], dest) -> None:
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="") as fh:
            return write_orders(orders, fh)
    w = csv.writer(dest, lineterminator="\n")
    w.writerow(ORDER_COLUMNS)
    for o in orders:
        w.writerow([o.o_t.isoformat(), o.o_s, o.o_d, o.passengers])


def read_orders(source) -> list[RideOrder]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="") as fh:
            return read_orders(fh)
    reader = csv.reader(source)
    if next(reader, None) != ORDER_COLUMNS:
        raise FormatError(f"expected header {','.join(ORDER_COLUMNS)}")
    out = []
    for row in reader:
        if row:
            out.append(RideOrder(int(row[1]), int(row[2]),
                                 datetime.fromisoformat(row[0]), int(row[3])))
    return out


def model_to_string(m: ODDemandModel) -> str:
    buf = io.StringIO()
    write_model(m, buf)
    return buf.getvalue()
