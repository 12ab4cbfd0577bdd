"""Regenerates the checked-in fixtures. Run from the repo root:

    python3 tests/data/make_fixtures.py

The golden plan comes from ``tests/reference.py``, not from the package planners.
"""
import csv
import json
import sys
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE.parent))

from reference import oracle_route  # noqa: E402

from windroute.demand import CSV_COLUMNS, ODDemandModel, write_model  # noqa: E402
from windroute.grid import grid_from_shape  # noqa: E402

GOLDEN = {"grid": "5x5", "start": 1, "dest": 25, "k": 2, "d": 1.3, "slot": 0}


def trips_csv(path: Path, rows: int = 1000, seed: int = 7) -> None:
    rng = np.random.default_rng(seed)
    t0 = datetime(2019, 2, 4, 6, 0)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in range(rows):
            t = t0 + timedelta(days=int(rng.integers(0, 8)), minutes=int(rng.integers(0, 240)))
            plat, dlat = rng.uniform(40.70, 40.80, 2)
            plon, dlon = rng.uniform(-74.02, -73.92, 2)
            pc = int(rng.integers(1, 4))
            if r % 97 == 13:
                w.writerow([t.isoformat(), "not-a-number", f"{plon:.6f}",
                            f"{dlat:.6f}", f"{dlon:.6f}", pc])
            else:
                w.writerow([t.isoformat(), f"{plat:.6f}", f"{plon:.6f}",
                            f"{dlat:.6f}", f"{dlon:.6f}", pc])


def grid5x5(seed: int = 3):
    rng = np.random.default_rng(seed)
    g = grid_from_shape(5, 5)
    weights = {}
    for i in range(1, 26):
        for j in range(1, 26):
            if i != j and rng.random() < 0.3:
                weights[(0, i, j)] = float(rng.integers(1, 5))
    return g, ODDemandModel(25, 15, weights)


def main():
    trips_csv(HERE / "trips_1000.csv")
    g, m = grid5x5()
    write_model(m, HERE / "grid5x5_demand.csv")
    path, obj = oracle_route(g, m.matrix(0), GOLDEN["start"], GOLDEN["dest"],
                             GOLDEN["k"], GOLDEN["d"])
    (HERE / "grid5x5_oracle_k2.json").write_text(
        json.dumps({**GOLDEN, "path": path, "objective": obj}, indent=2) + "\n")
    print(path, obj)


if __name__ == "__main__":
    main()
