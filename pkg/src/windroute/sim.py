"""Replay held-out orders along recommended routes and score the result."""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from collections import defaultdict
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timedelta
from typing import Iterable, Sequence

import numpy as np

from . import scenarios
from .demand import ODDemandModel, RideOrder, slot_of
from .detour import DetourConfig, VehicleState, detour_ratio, try_admit
from .grid import RoadGraph
from .recommend import ALGORITHMS, PlannerInput, recommend_route

log = logging.getLogger(__name__)

PATTERNS = ("uniform", "clustered", "figure5")
METRIC_COLUMNS = ["algo", "k", "d", "C", "VU", "pct_shared", "ppg",
                  "served", "rejected", "mean_query_s"]


class LeakageError(ValueError):
    """A replayed order falls inside the training period."""


@dataclass(frozen=True)
class Trip:
    start: int
    final_dest: int
    time: datetime
    primary: RideOrder | None = None


@dataclass(frozen=True)
class SimConfig:
    algo: str = "backward"
    k: int = 5
    d: float = 1.5
    capacity: int = 4
    slot_minutes: int = 15
    seed: int = 0
    start: int | None = None
    dest: int | None = None
    n_trips: int = 50

    def __post_init__(self):
        if self.algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algo!r}")
        if self.k < 1 or self.d < 1 or self.capacity < 1:
            raise ValueError("need k >= 1, d >= 1 and capacity >= 1")
        if (self.start is None) != (self.dest is None):
            raise ValueError("start and dest go together")


@dataclass
class ServedOrder:
    order: RideOrder
    trip: int
    pickup_index: int
    dropoff_index: int
    ratio: float


@dataclass
class SimMetrics:
    vehicle_utilization: float
    pct_orders_shared: float
    passengers_per_grid: float
    orders_served: int
    orders_rejected: int
    orders_offered: int
    mean_query_seconds: float
    pct_defined: bool = True
    trips: int = 0
    served: list[ServedOrder] = field(default_factory=list, repr=False)
    events: list[dict] | None = field(default=None, repr=False)

    def row(self, cfg: SimConfig) -> dict:
        return {"algo": cfg.algo, "k": cfg.k, "d": cfg.d, "C": cfg.capacity,
                "VU": self.vehicle_utilization, "pct_shared": self.pct_orders_shared,
                "ppg": self.passengers_per_grid, "served": self.orders_served,
                "rejected": self.orders_rejected, "mean_query_s": self.mean_query_seconds}


def pct_orders_shared(intervals_by_trip: Iterable[Sequence[tuple[int, int]]]) -> float:
    """Percent of served orders sharing at least one hop with another order on the same trip.

    Each interval is ``(pickup_index, dropoff_index)`` on that trip's path; the
    order occupies hops ``pickup_index .. dropoff_index - 1``.
    """
    total = shared = 0
    for ivs in intervals_by_trip:
        ivs = list(ivs)
        for t, (a, b) in enumerate(ivs):
            total += 1
            if any(min(b, b2) - max(a, a2) >= 1
                   for u, (a2, b2) in enumerate(ivs) if u != t):
                shared += 1
    return 100.0 * shared / total if total else 0.0


def _window_key(t: datetime, slot_minutes: int) -> tuple:
    return (t.date(), slot_of(t, slot_minutes))


def _check_leakage(demand: ODDemandModel, orders: Iterable[RideOrder]) -> None:
    if demand.train_end is None:
        return
    for o in orders:
        if o.o_t < demand.train_end:
            raise LeakageError(f"order at {o.o_t} predates the end of training "
                               f"({demand.train_end})")


def make_trips(cfg: SimConfig, orders: Sequence[RideOrder]) -> list[Trip]:
    """Either a fixed start/dest at every slot that has orders, or trips that
    each begin by picking up a sampled order and drive it to its destination."""
    if cfg.start is not None:
        keys = sorted({_window_key(o.o_t, cfg.slot_minutes) for o in orders})[:cfg.n_trips]
        return [Trip(cfg.start, cfg.dest,
                     datetime.combine(day, datetime.min.time())
                     + timedelta(minutes=slot * cfg.slot_minutes))
                for day, slot in keys]
    if not orders:
        raise ValueError("no test orders to build trips from")
    rng = np.random.default_rng(cfg.seed)
    n = min(cfg.n_trips, len(orders))
    picks = sorted(rng.choice(len(orders), size=n, replace=False).tolist(),
                   key=lambda t: (orders[t].o_t, t))
    return [Trip(orders[t].o_s, orders[t].o_d, orders[t].o_t, orders[t]) for t in picks]


def run_simulation(cfg: SimConfig, road: RoadGraph, demand: ODDemandModel,
                   test_orders: Sequence[RideOrder], trips: Sequence[Trip] | None = None,
                   record_events: bool = False) -> SimMetrics:
    """Plan each trip, drive it cell by cell and admit orders first come, first served.

    An order is offered when the vehicle is at its origin during the order's
    slot; it can only be taken if its destination lies further along the route.
    """
    if trips is None:
        if not test_orders:
            raise ValueError("empty test set")
        trips = make_trips(cfg, test_orders)
    _check_leakage(demand, test_orders)
    detour = DetourConfig(cfg.d)

    pool: dict[tuple, list[RideOrder]] = defaultdict(list)
    for o in sorted(test_orders, key=lambda o: o.o_t):
        pool[(*_window_key(o.o_t, cfg.slot_minutes), o.o_s)].append(o)

    hops = occupied = offered = rejected = 0
    query_times = []
    served: list[ServedOrder] = []
    intervals = []
    events = [] if record_events else None

    for t_idx, trip in enumerate(trips):
        slot = slot_of(trip.time, cfg.slot_minutes)
        inp = PlannerInput(road, demand, trip.start, trip.final_dest, slot, cfg.k, detour,
                           VehicleState(trip.start, cfg.capacity))
        t0 = time.perf_counter()
        plan = recommend_route(cfg.algo, inp)
        query_times.append(time.perf_counter() - t0)
        path = plan.path
        where = {c: i for i, c in enumerate(path)}
        state = VehicleState(trip.start, cfg.capacity, route_so_far=[trip.start], plan=path)
        key = _window_key(trip.time, cfg.slot_minutes)
        trip_ivs = []

        def offer(order: RideOrder, a: int) -> bool:
            nonlocal offered, rejected
            offered += 1
            b = where.get(order.o_d, -1)
            if b <= a:
                rejected += 1
                return False
            verdict = try_admit(road, state, order, path, detour)
            if not verdict:
                rejected += 1
                return False
            ratio = detour_ratio(road, path[a:b + 1], order.o_s, order.o_d)
            served.append(ServedOrder(order, t_idx, a, b, ratio))
            trip_ivs.append((a, b))
            return True

        # an earlier trip may already have carried the primary rider
        if trip.primary is not None and any(
                o is trip.primary for o in pool.get((*key, trip.start), ())):
            offer(trip.primary, 0)
        for a, cell in enumerate(path):
            state.position = cell
            if a:
                state.route_so_far.append(cell)
            bucket = pool.get((*key, cell))
            if not bucket:
                continue
            kept = []
            for order in bucket:
                if order is trip.primary or not offer(order, a):
                    if order is not trip.primary:
                        kept.append(order)
            pool[(*key, cell)] = kept

        load = [0] * max(len(path) - 1, 0)
        for (a, b), s in zip(trip_ivs, served[len(served) - len(trip_ivs):]):
            for h in range(a, b):
                load[h] += s.order.passengers
        hops += len(load)
        occupied += sum(load)
        intervals.append(trip_ivs)
        if events is not None:
            events.append({"trip": t_idx, "path": path, "load": load,
                           "objective": plan.objective})

    vu = occupied / (hops * cfg.capacity) if hops else 0.0
    n_served = len(served)
    return SimMetrics(
        vehicle_utilization=vu,
        pct_orders_shared=pct_orders_shared(intervals),
        passengers_per_grid=vu * cfg.capacity,
        orders_served=n_served,
        orders_rejected=rejected,
        orders_offered=offered,
        mean_query_seconds=float(np.mean(query_times)) if query_times else 0.0,
        pct_defined=n_served > 0,
        trips=len(trips),
        served=served,
        events=events,
    )


def sweep(configs: Sequence[SimConfig], road: RoadGraph, demand: ODDemandModel,
          test_orders: Sequence[RideOrder], trips: Sequence[Trip] | None = None) -> list[dict]:
    """One metrics row per config, all replaying the same trips and orders."""
    if not configs:
        return []
    if trips is None:
        trips = make_trips(configs[0], test_orders)
    rows = []
    for cfg in configs:
        m = run_simulation(cfg, road, demand, test_orders, trips)
        rows.append(m.row(cfg))
        log.info("%s", rows[-1])
    return rows


def grid_configs(base: SimConfig, algos: Sequence[str] | None = None,
                 ks: Sequence[int] | None = None,
                 ds: Sequence[float] | None = None) -> list[SimConfig]:
    out = []
    for algo in algos or [base.algo]:
        for k in ks or [base.k]:
            for d in ds or [base.d]:
                out.append(replace(base, algo=algo, k=k, d=d))
    return out


def write_rows(rows: Sequence[dict], dest, fmt: str = "csv", meta: dict | None = None) -> None:
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="") as fh:
            return write_rows(rows, fh, fmt, meta)
    if fmt == "json":
        json.dump({"meta": meta or {}, "rows": list(rows)}, dest, indent=2, default=str)
        dest.write("\n")
    else:
        w = csv.DictWriter(dest, METRIC_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({c: r[c] for c in METRIC_COLUMNS})


def _hop_distance(road: RoadGraph, i: int, j: int) -> int:
    a, b = road.cell(i), road.cell(j)
    return max(abs(a.row - b.row), abs(a.col - b.col))


def generate_synthetic_orders(road: RoadGraph, pattern: str, seed: int = 0, days: int = 4,
                              orders_per_day: int | None = None, slot_minutes: int = 15,
                              start: datetime = scenarios.T0, hotspots: int = 3,
                              spread: float = 1.0) -> tuple[list[RideOrder], ODDemandModel]:
    """Seeded order stream plus the demand model that generated it.

    All orders fall in the slot containing ``start``, on ``days`` consecutive
    days. ``uniform`` draws origin/destination pairs uniformly; ``clustered``
    draws them from Gaussian bumps joining random hotspot pairs; ``figure5`` is
    the fixed eight-cell scenario (``road`` must be the example road).
    """
    if pattern == "figure5":
        if road.n != 8:
            raise ValueError("figure5 needs scenarios.example_road()")
        return scenarios.toy_orders(), scenarios.toy_demand(slot_minutes)
    if pattern not in PATTERNS:
        raise ValueError(f"unknown pattern {pattern!r}")
    n = road.n
    if n < 2:
        raise ValueError("need at least two cells")
    rng = np.random.default_rng(seed)
    per_day = orders_per_day if orders_per_day is not None else 4 * n
    slot = slot_of(start, slot_minutes)
    t_base = start.replace(minute=start.minute - start.minute % slot_minutes, second=0,
                           microsecond=0)

    if pattern == "uniform":
        rates = np.full((n + 1, n + 1), per_day / (n * (n - 1)))
        rates[0, :] = rates[:, 0] = 0.0
        np.fill_diagonal(rates, 0.0)
    else:
        if road.nrows is None:
            raise ValueError("clustered pattern needs a rectangular grid")
        hubs = rng.choice(np.arange(1, n + 1), size=min(hotspots, n), replace=False)
        hop = np.array([[0] * (n + 1)] + [[0] + [_hop_distance(road, i, j)
                                                 for j in range(1, n + 1)]
                                          for i in range(1, n + 1)], dtype=float)
        near = np.exp(-(hop[:, hubs] ** 2) / (2 * spread ** 2))  # (n+1, h)
        near[0] = 0.0
        rates = np.zeros((n + 1, n + 1))
        for a in range(len(hubs)):
            for b in range(len(hubs)):
                if a != b:
                    rates += np.outer(near[:, a], near[:, b])
        rates += 0.02 * rates.max()
        rates[0, :] = rates[:, 0] = 0.0
        np.fill_diagonal(rates, 0.0)
        rates *= per_day / rates.sum()

    orders = []
    pairs = np.argwhere(rates > 0)
    lam = rates[rates > 0]
    for day in range(days):
        counts = rng.poisson(lam)
        for (i, j), c in zip(pairs, counts):
            for _ in range(int(c)):
                sec = float(rng.uniform(0, slot_minutes * 60))
                orders.append(RideOrder(int(i), int(j),
                                        t_base + timedelta(days=day, seconds=math.floor(sec))))
    orders.sort(key=lambda o: (o.o_t, o.o_s, o.o_d))
    weights = {(slot, int(i), int(j)): float(w) for (i, j), w in zip(pairs, lam)}
    return orders, ODDemandModel(n, slot_minutes, weights)


def metrics_dict(m: SimMetrics) -> dict:
    d = asdict(m)
    d.pop("served")
    d.pop("events")
    return d
