"""Numba kernels against their pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat N]

Both variants are called directly, so one process covers both regardless of
WINDROUTE_NUMBA. A full planner query is timed in a subprocess per backend.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from windroute import kernels
from windroute.grid import NYC_BBOX, build_grid, grid_from_shape, khop_window
from windroute.recommend import _local_graph


def bench(fn, repeat):
    fn()  # compile / warm caches
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def sssp_case(repeat):
    g = build_grid(NYC_BBOX, 2.5)
    blocked = np.zeros(g.n + 1, dtype=np.bool_)
    args = (g.nbr, g.nbr_len, np.int64(1), blocked)
    return (bench(lambda: kernels._sssp_nb(*args), repeat),
            bench(lambda: kernels._sssp_np(*args), repeat))


def best_path_case(repeat):
    g = grid_from_shape(5, 5)
    rng = np.random.default_rng(0)
    win = khop_window(g, 13, 2)
    allowed = np.zeros(g.n + 1, dtype=np.bool_)
    allowed[list(win.members)] = True
    ids, local, adj, adj_len = _local_graph(g, allowed)
    W = rng.integers(0, 4, (len(ids), len(ids))).astype(float)
    inw0 = np.zeros(len(ids))
    lb = np.zeros(len(ids))
    args = (adj, adj_len, W, inw0, np.int64(local[1]), np.int64(local[25]), lb, 7.0)
    return (bench(lambda: kernels._best_path_nb(*args), repeat),
            bench(lambda: kernels._best_path_np(*args), max(1, repeat // 5)))


QUERY = """
import time
from windroute.grid import NYC_BBOX, build_grid
from windroute.sim import generate_synthetic_orders
from windroute.recommend import PlannerInput, recommend_route
g = build_grid(NYC_BBOX, 2.5)
orders, m = generate_synthetic_orders(g, "clustered", seed=0)
slot = m.slot_for(orders[0].o_t)
recommend_route("backward", PlannerInput(g, m, 1, 400, slot, 5))
t = time.perf_counter()
for s, e in [(1, 400), (20, 381), (150, 260), (5, 395), (210, 11)]:
    recommend_route("backward", PlannerInput(g, m, s, e, slot, 5))
print((time.perf_counter() - t) / 5)
"""


def query_case():
    out = []
    for flag in ("1", "0"):
        env = {**os.environ, "WINDROUTE_NUMBA": flag}
        res = subprocess.run([sys.executable, "-c", QUERY], env=env, capture_output=True,
                             text=True, check=True)
        out.append(float(res.stdout.strip()))
    return tuple(out)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if not kernels.HAVE_NUMBA:
        sys.exit("numba is not installed; nothing to compare")
    rows = [("sssp, 400-cell grid", *sssp_case(args.repeat)),
            ("best_path, 25-cell window", *best_path_case(args.repeat)),
            ("backward query k=5, 400 cells", *query_case())]
    print(f"{'case':<32}{'numba ms':>12}{'numpy ms':>12}{'speed-up':>10}")
    for name, nb, py in rows:
        print(f"{name:<32}{nb * 1e3:>12.3f}{py * 1e3:>12.3f}{py / nb:>9.1f}x")


if __name__ == "__main__":
    main()
