"""Command-line entry point: ``windroute {ingest,recommend,simulate,sweep,oracle-check}``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import kernels, scenarios
from .demand import (EmptyModelError, FormatError, ODDemandModel, build_demand_model,
                     ingest_trips, read_model, read_orders, write_model, write_orders)
from .detour import DetourConfig
from .grid import DC_BBOX, NYC_BBOX, BBox, GridError, RoadGraph, build_grid, grid_from_shape
from .recommend import ALGORITHMS, PlannerInput, recommend_route
from .sim import (PATTERNS, SimConfig, Trip, generate_synthetic_orders, grid_configs,
                  metrics_dict, run_simulation, sweep, write_rows)

log = logging.getLogger("windroute")

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_FORMAT, EXIT_IO = 0, 1, 2, 3, 4

DEFAULTS = {
    "grid": None, "cell_km": 2.5, "slot_min": 15, "split": 0.75, "k": 5, "detour": 1.5,
    "capacity": 4, "algo": "backward", "pattern": None, "seed": 0, "out": None,
    "format": "csv", "trace": False, "compare": None, "data": None, "model": None,
    "start": None, "dest": None, "slot": None, "trips": 50, "ks": None, "detours": None,
    "instances": 200, "events": False,
}


class UsageError(ValueError):
    pass


def parse_grid(spec: str | None, cell_km: float = 2.5) -> RoadGraph:
    """``nyc``, ``dc``, ``example``, ``RxC`` or ``bbox:min_lat,min_lon,max_lat,max_lon``."""
    if spec is None:
        raise UsageError("--grid is required")
    s = spec.strip().lower()
    if s == "nyc":
        return build_grid(NYC_BBOX, cell_km)
    if s == "dc":
        return build_grid(DC_BBOX, cell_km)
    if s == "example":
        return scenarios.example_road()
    if s.startswith("bbox:"):
        try:
            vals = [float(x) for x in s[5:].split(",")]
        except ValueError:
            raise UsageError(f"bad bbox {spec!r}") from None
        if len(vals) != 4:
            raise UsageError("bbox needs four numbers")
        return build_grid(BBox(*vals), cell_km)
    shape = re.fullmatch(r"(\d+)x(\d+)", s)
    if shape:
        return grid_from_shape(int(shape[1]), int(shape[2]), cell_km)
    raise UsageError(f"unrecognised grid spec {spec!r}")


def load_config(path: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment. Keys match the long flags."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, val = (x.strip() for x in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = val
    return out


def _coerce(key: str, val):
    default = DEFAULTS[key]
    if isinstance(val, str):
        if isinstance(default, bool):
            return val.lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(val)
        if isinstance(default, float):
            return float(val)
        if key in ("start", "dest", "slot"):
            return int(val)
    return val


def resolve(ns: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from the config file, then from built-in defaults."""
    cfg = load_config(ns.config) if getattr(ns, "config", None) else {}
    for key, default in DEFAULTS.items():
        if getattr(ns, key, None) is None:
            setattr(ns, key, _coerce(key, cfg[key]) if key in cfg else default)
    if ns.algo not in ALGORITHMS:
        raise UsageError(f"unknown algorithm {ns.algo!r}")
    if ns.pattern is not None and ns.pattern not in PATTERNS:
        raise UsageError(f"unknown pattern {ns.pattern!r}")
    if ns.pattern is not None and (ns.data is not None or ns.model is not None):
        raise UsageError("--pattern and --data/--model are mutually exclusive")
    return ns


def _csv_list(text: str | None, cast=str) -> list | None:
    if text is None:
        return None
    return [cast(x.strip()) for x in str(text).split(",") if x.strip()]


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- ingest

def cmd_ingest(ns) -> int:
    if ns.data is None:
        raise UsageError("ingest needs a dataset path")
    if ns.out is None:
        raise UsageError("ingest needs --out DIR")
    records, skipped = ingest_trips(ns.data)
    if ns.grid is None:
        if not records:
            raise UsageError("cannot infer a grid from an empty dataset; pass --grid")
        lats = [x for r in records for x in (r.pickup_lat, r.dropoff_lat)]
        lons = [x for r in records for x in (r.pickup_lon, r.dropoff_lon)]
        ns.grid = f"bbox:{min(lats)},{min(lons)},{max(lats)},{max(lons)}"
    g = parse_grid(ns.grid, ns.cell_km)
    model, test = build_demand_model(records, g, ns.slot_min, ns.split)
    out = Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    write_model(model, out / "demand.csv")
    write_orders(test, out / "test_orders.csv")
    meta = {
        "grid": ns.grid, "cell_km": ns.cell_km, "n": g.n, "slot_minutes": ns.slot_min,
        "split": ns.split, "rows": len(records), "skipped": skipped,
        "train_start": model.train_start.isoformat(), "train_end": model.train_end.isoformat(),
        "train_days": model.train_days, "test_orders": len(test),
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"rows={len(records)} skipped={skipped} cells={g.n} "
          f"test_orders={len(test)} out={out}")
    return EXIT_OK


# ---------------------------------------------------------------- shared loading

def load_inputs(ns):
    """Returns ``(road, demand, test_orders, fixed_trip)``."""
    if ns.pattern == "figure5":
        road = scenarios.example_road()
        orders, demand = generate_synthetic_orders(road, "figure5", ns.seed,
                                                   slot_minutes=ns.slot_min)
        return road, demand, orders, (1, 4)
    if ns.pattern is not None:
        road = parse_grid(ns.grid or "10x10", ns.cell_km)
        orders, demand = generate_synthetic_orders(road, ns.pattern, ns.seed,
                                                   slot_minutes=ns.slot_min)
        return road, demand, orders, None
    if ns.data is not None:
        d = Path(ns.data)
        meta = json.loads((d / "meta.json").read_text())
        road = parse_grid(meta["grid"], meta["cell_km"])
        ns.slot_min = meta["slot_minutes"]
        from datetime import datetime
        demand = read_model(d / "demand.csv", meta["n"], meta["slot_minutes"],
                            train_start=datetime.fromisoformat(meta["train_start"]),
                            train_end=datetime.fromisoformat(meta["train_end"]),
                            train_days=meta["train_days"])
        return road, demand, read_orders(d / "test_orders.csv"), None
    if ns.model is not None:
        road = parse_grid(ns.grid, ns.cell_km)
        return road, read_model(ns.model, road.n, ns.slot_min), [], None
    raise UsageError("need one of --pattern, --data or --model")


def _sim_config(ns, fixed) -> SimConfig:
    start, dest = ns.start, ns.dest
    if start is None and fixed is not None:
        start, dest = fixed
    return SimConfig(algo=ns.algo, k=ns.k, d=ns.detour, capacity=ns.capacity,
                     slot_minutes=ns.slot_min, seed=ns.seed, start=start, dest=dest,
                     n_trips=ns.trips)


def _meta(ns) -> dict:
    return {"seed": ns.seed, "backend": kernels.BACKEND, "pattern": ns.pattern,
            "data": ns.data, "grid": ns.grid}


# ---------------------------------------------------------------- recommend

def cmd_recommend(ns) -> int:
    road, demand, orders, fixed = load_inputs(ns)
    start, dest = ns.start, ns.dest
    if start is None and fixed is not None:
        start, dest = fixed
    if start is None or dest is None:
        raise UsageError("recommend needs --start and --dest")
    slot = ns.slot
    if slot is None:
        slot = demand.slot_for(orders[0].o_t) if orders else 0
    inp = PlannerInput(road, demand, start, dest, slot, ns.k, DetourConfig(ns.detour))
    plan = recommend_route(ns.algo, inp, trace=ns.trace)
    out = plan.to_json()
    out["detour_ratio"] = (plan_length(road, plan.path) / road.sp_length(start, dest)
                           if start != dest else 1.0)
    out["meta"] = {**_meta(ns), "k": ns.k, "d": ns.detour, "slot": slot}
    _emit(json.dumps(out, indent=2) + "\n", ns.out)
    return EXIT_OK


def plan_length(road, path):
    from .grid import path_length
    return path_length(road, path)


# ---------------------------------------------------------------- simulate / sweep

def _render(rows, ns, extra_meta=None) -> str:
    import io
    buf = io.StringIO()
    write_rows(rows, buf, ns.format, {**_meta(ns), **(extra_meta or {})})
    return buf.getvalue()


def cmd_simulate(ns) -> int:
    road, demand, orders, fixed = load_inputs(ns)
    base = _sim_config(ns, fixed)
    algos = _csv_list(ns.compare) or [ns.algo]
    for a in algos:
        if a not in ALGORITHMS:
            raise UsageError(f"unknown algorithm {a!r}")
    configs = grid_configs(base, algos)
    if ns.events:
        results = []
        events = {}
        for cfg in configs:
            m = run_simulation(cfg, road, demand, orders, record_events=True)
            results.append(m.row(cfg))
            events[cfg.algo] = m.events
        text = _render(results, ns)
        if ns.out:
            Path(str(ns.out) + ".events.json").write_text(json.dumps(events, default=str))
    else:
        text = _render(sweep(configs, road, demand, orders), ns)
    _emit(text, ns.out)
    return EXIT_OK


def cmd_sweep(ns) -> int:
    road, demand, orders, fixed = load_inputs(ns)
    base = _sim_config(ns, fixed)
    algos = _csv_list(ns.compare) or [ns.algo]
    configs = grid_configs(base, algos, _csv_list(ns.ks, int), _csv_list(ns.detours, float))
    _emit(_render(sweep(configs, road, demand, orders), ns), ns.out)
    return EXIT_OK


# ---------------------------------------------------------------- oracle-check

def random_single_window_instance(rng: np.random.Generator, max_cells: int = 25):
    """Small grid that one window covers entirely, with random demand and threshold."""
    while True:
        r, c = int(rng.integers(2, 6)), int(rng.integers(2, 6))
        if r * c <= max_cells:
            break
    road = grid_from_shape(r, c)
    n = road.n
    W = rng.integers(0, 4, size=(n, n)) * (rng.random((n, n)) < 0.4)
    weights = {(0, i + 1, j + 1): float(W[i, j]) for i in range(n) for j in range(n)
               if i != j and W[i, j] > 0}
    demand = ODDemandModel(n, 15, weights)
    start, dest = (int(x) for x in rng.choice(np.arange(1, n + 1), size=2, replace=False))
    k = max(r, c)
    d = float(rng.uniform(1.0, 2.0))
    return PlannerInput(road, demand, start, dest, 0, k, DetourConfig(d))


def oracle_check(instances: int, seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    rows = []
    for t in range(instances):
        inp = random_single_window_instance(rng)
        best = recommend_route("oracle", inp).objective
        for algo in ("simple", "backward", "forward", "shortest", "demand_only"):
            obj = recommend_route(algo, replace(inp)).objective
            rows.append({"instance": t, "algo": algo, "objective": obj, "oracle": best,
                         "ok": obj <= best + kernels.REL_TOL * max(1.0, best)})
    return rows


def cmd_oracle_check(ns) -> int:
    rows = oracle_check(ns.instances, ns.seed)
    bad = [r for r in rows if not r["ok"]]
    summary = {"instances": ns.instances, "comparisons": len(rows), "violations": len(bad),
               "meta": _meta(ns)}
    if ns.format == "json":
        _emit(json.dumps({"summary": summary, "violations": bad}, indent=2) + "\n", ns.out)
    else:
        _emit(f"instances={ns.instances} comparisons={len(rows)} violations={len(bad)}\n",
              ns.out)
    return EXIT_OK if not bad else EXIT_ERROR


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; explicit flags win")
    common.add_argument("--grid", help="nyc | dc | example | RxC | bbox:lat0,lon0,lat1,lon1")
    common.add_argument("--cell-km", dest="cell_km", type=float)
    common.add_argument("--slot-min", dest="slot_min", type=int)
    common.add_argument("--k", type=int)
    common.add_argument("--detour", type=float)
    common.add_argument("--capacity", type=int)
    common.add_argument("--algo", choices=ALGORITHMS)
    common.add_argument("--pattern", choices=PATTERNS)
    common.add_argument("--seed", type=int)
    common.add_argument("--out")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--data", help="ingest output directory (or CSV for ingest)")
    common.add_argument("--model", help="sparse demand CSV (with --grid)")

    p = argparse.ArgumentParser(prog="windroute", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    ing = sub.add_parser("ingest", parents=[common], help="trip CSV -> demand model + test orders")
    ing.add_argument("dataset", nargs="?")
    ing.add_argument("--split", type=float)

    rec = sub.add_parser("recommend", parents=[common], help="print one route plan as JSON")
    rec.add_argument("--start", type=int)
    rec.add_argument("--dest", type=int)
    rec.add_argument("--slot", type=int)
    rec.add_argument("--trace", action="store_const", const=True)

    for name, helptext in (("simulate", "replay orders and report metrics"),
                           ("sweep", "metrics over a grid of k / detour values")):
        sp = sub.add_parser(name, parents=[common], help=helptext)
        sp.add_argument("--compare", help="comma-separated algorithms run on identical inputs")
        sp.add_argument("--start", type=int)
        sp.add_argument("--dest", type=int)
        sp.add_argument("--trips", type=int)
        if name == "sweep":
            sp.add_argument("--ks", help="comma-separated k values")
            sp.add_argument("--detours", help="comma-separated detour thresholds")
        else:
            sp.add_argument("--events", action="store_const", const=True,
                            help="also write per-cell occupancy next to --out")

    oc = sub.add_parser("oracle-check", parents=[common],
                        help="heuristics vs brute force on random single-window instances")
    oc.add_argument("--instances", type=int)
    return p


COMMANDS = {"ingest": cmd_ingest, "recommend": cmd_recommend, "simulate": cmd_simulate,
            "sweep": cmd_sweep, "oracle-check": cmd_oracle_check}


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("WINDROUTE_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command == "ingest" and getattr(ns, "dataset", None):
        ns.data = ns.dataset
    try:
        ns = resolve(ns)
        return COMMANDS[ns.command](ns)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"windroute: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, EmptyModelError) as e:
        print(f"windroute: format error: {e}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as e:
        print(f"windroute: I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, GridError, KeyError) as e:
        print(f"windroute: error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
