"""Route planners over k-hop sliding windows.

Every planner walks from ``start`` to ``final_dest`` and keeps a single
distance budget: the tightest of ``d * SP(start, final)`` (the trip itself) and
``d * SP(o_s, o_d) - traveled`` for each onboard rider. A move is allowed only if
the committed length, plus the move, plus the shortest way on to
``final_dest`` through unvisited cells, still fits the budget. Following the
restricted shortest path always fits, so the shortest-path fallback can
always make progress, and every committed route is detour-feasible.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .demand import ODDemandModel, path_expected_requests
from .detour import DetourConfig, VehicleState
from .grid import NoPathError, RoadGraph, Window, khop_window, shortest_path, trace_shortest

log = logging.getLogger(__name__)

ALGORITHMS = ("simple", "backward", "forward", "oracle", "shortest", "demand_only")
DEFAULT_WINDOW_CAP = 30
FALLBACK = None  # select_window_endpoint result when no endpoint qualifies


class WindowTooLargeError(ValueError):
    pass


@dataclass
class PlannerInput:
    road: RoadGraph
    demand: ODDemandModel
    start: int
    final_dest: int
    slot: int = 0
    k: int = 5
    cfg: DetourConfig = field(default_factory=DetourConfig)
    state: VehicleState | None = None
    window_cap: int = DEFAULT_WINDOW_CAP

    def __post_init__(self):
        self.road.check(self.start)
        self.road.check(self.final_dest)
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.state is None:
            self.state = VehicleState(self.start)


@dataclass
class RoutePlan:
    path: list[int]
    objective: float
    windows: list[tuple[int, int]]
    algo: str = ""
    fallbacks: list[int] = field(default_factory=list)
    trace: list[dict] | None = None

    def to_json(self) -> dict:
        out = {"path": [int(c) for c in self.path], "objective": self.objective,
               "windows": [[int(a), int(b)] for a, b in self.windows],
               "algo": self.algo, "fallbacks": self.fallbacks}
        if self.trace is not None:
            out["trace"] = self.trace
        return out


def _fits(length: float, budget: float) -> bool:
    return length <= budget * (1.0 + kernels.REL_TOL)


def trip_budget(inp: PlannerInput) -> float:
    g, d = inp.road, inp.cfg.d
    sp = g.sp_length(inp.start, inp.final_dest)
    budget = d * sp
    for ob in inp.state.onboard:
        o = ob.order
        if not ob.picked_up or o.o_d != inp.final_dest:
            raise ValueError("planners need onboard riders already picked up and "
                             "bound for final_dest")
        if o.o_s != o.o_d:
            budget = min(budget, d * g.sp_length(o.o_s, o.o_d) - ob.traveled_km)
    if budget < sp:
        log.warning("onboard riders already exceed the threshold; planning the shortest path")
        budget = sp
    return budget


class _Route:
    """Mutable route under construction; one per planner call."""

    def __init__(self, inp: PlannerInput, trace: bool = False):
        self.inp = inp
        self.g = inp.road
        self.W = inp.demand.matrix(inp.slot)
        self.final = inp.final_dest
        self.budget = trip_budget(inp)
        self.path = [inp.start]
        self.length = 0.0
        self.visited = np.zeros(self.g.n + 1, dtype=np.bool_)
        self.visited[inp.start] = True
        self.inw = self.W[inp.start].copy()
        self.windows: list[tuple[int, int]] = []
        self.fallbacks: list[int] = []
        self.trace: list[dict] | None = [] if trace else None

    @property
    def cur(self) -> int:
        return self.path[-1]

    def mask(self, cells) -> np.ndarray:
        m = np.zeros(self.g.n + 1, dtype=np.bool_)
        m[list(cells)] = True
        return m

    def to_final(self, extra: np.ndarray | None = None, keep_cur: bool = False) -> np.ndarray:
        """Distances to ``final`` that avoid visited cells (and ``extra``)."""
        blocked = self.visited.copy()
        if extra is not None:
            blocked |= extra
        if keep_cur:
            blocked[self.cur] = False
        blocked[self.final] = False
        return kernels.sssp(self.g.nbr, self.g.nbr_len, self.final, blocked)

    def fits(self, total: float) -> bool:
        return _fits(total, self.budget)

    def commit(self, seg: list[int], fallback: bool = False) -> None:
        assert seg[0] == self.cur and len(seg) >= 2
        for a, b in zip(seg, seg[1:]):
            assert not self.visited[b], "route would revisit a cell"
            self.length += self.g.edge_length[(a, b)]
            self.visited[b] = True
            self.inw += self.W[b]
        self.path.extend(seg[1:])
        if fallback:
            self.fallbacks.append(len(self.windows))
        self.windows.append((seg[0], seg[-1]))

    def fallback(self, hops: int) -> None:
        dist = self.to_final(keep_cur=True)
        seg = trace_shortest(self.g, self.cur, dist, self.final)[:hops + 1]
        self.commit(seg, fallback=True)

    def log_step(self, **info) -> None:
        if self.trace is not None:
            self.trace.append({k: (v if not isinstance(v, dict) else
                                   {int(a): float(b) for a, b in v.items()})
                               for k, v in info.items()})

    def finish(self, algo: str) -> RoutePlan:
        obj = path_expected_requests(self.inp.demand, self.path, self.inp.slot)
        return RoutePlan(list(self.path), obj, self.windows, algo, self.fallbacks, self.trace)


def _od_score(route: _Route, s: int) -> Callable[[int], float]:
    return lambda m: float(route.W[s, m])


def _node_score(route: _Route) -> Callable[[int], float]:
    totals = route.W.sum(axis=1)
    return lambda m: float(totals[m])


def _rank_endpoints(route: _Route, win: Window, score: Callable[[int], float]) -> list[int]:
    """Window members worth heading for, best first (score desc, id asc)."""
    g, s, final = route.g, route.cur, route.final
    allowed = route.mask(win.members) & ~route.visited
    allowed[s] = True
    D = route.to_final()
    blocked = ~allowed
    blocked[final] = True
    ds = kernels.sssp(g.nbr, g.nbr_len, s, blocked)
    if final in win.members and not route.visited[final]:
        ds[final] = min((ds[j] + g.edge_length[(j, final)] for j in g.adjacency[final]
                         if np.isfinite(ds[j])), default=np.inf)
    ranked, scores = [], {}
    for m in sorted(win.members):
        if m == s or route.visited[m]:
            continue
        sc = score(m)
        scores[m] = sc
        if sc > 0 and np.isfinite(ds[m]) and route.fits(route.length + ds[m] + D[m]):
            ranked.append(m)
    ranked.sort(key=lambda m: (-scores[m], m))
    route.log_step(stage="endpoint", center=s, candidates=scores)
    return ranked


def _intermediate_blocked(route: _Route, win: Window, chain: list[int], end: int) -> np.ndarray:
    blocked = ~route.mask(win.members) | route.visited
    blocked[chain] = True
    if route.final != end:
        blocked[route.final] = True
    return blocked


def _backward_segment(route: _Route, win: Window, e: int, tail_lb: float) -> list[int] | None:
    """Grow a chain back from ``e`` through max-request predecessors until it touches the source."""
    g, s = route.g, route.cur
    chain, u, chain_len = [e], e, 0.0
    while s not in g.adjacency[u]:
        blocked = _intermediate_blocked(route, win, chain, e)
        blocked[s] = False
        ds = kernels.sssp(g.nbr, g.nbr_len, s, blocked)
        cands = {}
        for p in g.adjacency[u]:
            if blocked[p] or p == s:
                continue
            x = g.edge_length[(p, u)]
            if route.fits(route.length + ds[p] + x + chain_len + tail_lb):
                cands[p] = float(route.W[p, u])
        route.log_step(stage="backward", node=u, candidates=cands)
        if not cands:
            return None
        p = min(cands, key=lambda c: (-cands[c], ds[c], c))
        chain_len += g.edge_length[(p, u)]
        chain.append(p)
        u = p
    return [s] + chain[::-1]


def _forward_segment(route: _Route, win: Window, e: int, tail_lb: float,
                     score: Callable[[int, int], float]) -> list[int] | None:
    """Walk from the source through successors scoring best towards ``e``."""
    g, s = route.g, route.cur
    seg, cur, seg_len = [s], s, 0.0
    while e not in g.adjacency[cur]:
        blocked = _intermediate_blocked(route, win, seg, e)
        blocked[e] = False
        de = kernels.sssp(g.nbr, g.nbr_len, e, blocked)
        cands = {}
        for q in g.adjacency[cur]:
            if blocked[q] or q == e:
                continue
            x = g.edge_length[(cur, q)]
            if route.fits(route.length + seg_len + x + de[q] + tail_lb):
                cands[q] = score(q, e)
        route.log_step(stage="forward", node=cur, candidates=cands)
        if not cands:
            return None
        q = min(cands, key=lambda c: (-cands[c], de[c], c))
        seg_len += g.edge_length[(cur, q)]
        seg.append(q)
        cur = q
    seg.append(e)
    return seg


def _segment_ok(route: _Route, seg: list[int]) -> bool:
    seg_len = sum(route.g.edge_length[(a, b)] for a, b in zip(seg, seg[1:]))
    extra = route.mask(seg[:-1])
    D = route.to_final(extra)
    return route.fits(route.length + seg_len + D[seg[-1]])


def _greedy_window(route: _Route, win: Window, variant: str) -> bool:
    s = route.cur
    if variant == "demand_only":
        node = _node_score(route)
        end_score = node
        step_score = lambda q, e: node(q)  # noqa: E731
    else:
        end_score = _od_score(route, s)
        step_score = lambda q, e: float(route.W[q, e])  # noqa: E731
    D = route.to_final()
    for e in _rank_endpoints(route, win, end_score):
        if variant == "backward":
            seg = _backward_segment(route, win, e, D[e])
        else:
            seg = _forward_segment(route, win, e, D[e], step_score)
        if seg is not None and _segment_ok(route, seg):
            route.commit(seg)
            return True
    return False


def _local_graph(g: RoadGraph, allowed: np.ndarray):
    ids = np.flatnonzero(allowed)
    local = {int(c): t for t, c in enumerate(ids)}
    deg = g.nbr.shape[1]
    adj = np.full((len(ids), deg), -1, dtype=np.int64)
    adj_len = np.zeros((len(ids), deg))
    for t, c in enumerate(ids):
        k = 0
        for j in g.adjacency[int(c)]:
            if j in local:
                adj[t, k] = local[j]
                adj_len[t, k] = g.edge_length[(int(c), j)]
                k += 1
    return ids, local, adj, adj_len


def _window_best(route: _Route, win: Window, end: int, tail_lb: float) -> list[int] | None:
    """Exhaustive best path from the current cell to ``end`` inside the window."""
    g, s = route.g, route.cur
    allowed = route.mask(win.members) & ~route.visited
    allowed[s] = True
    if end != route.final:
        allowed[route.final] = False
    if not allowed[end]:
        return None
    ids, local, adj, adj_len = _local_graph(g, allowed)
    lb = kernels.sssp(g.nbr, g.nbr_len, end, ~allowed)[ids]
    Wl = np.ascontiguousarray(route.W[np.ix_(ids, ids)])
    inw0 = route.inw[ids]
    max_len = route.budget * (1.0 + kernels.REL_TOL) - route.length - tail_lb
    path, obj, _ = kernels.best_path(adj, adj_len, Wl, inw0, local[s], local[end], lb, max_len)
    if path.size == 0:
        return None
    route.log_step(stage="oracle", center=s, endpoint=end, gain=obj)
    return [int(ids[t]) for t in path]


def _check_cap(route: _Route, win: Window) -> None:
    if len(win.members) > route.inp.window_cap:
        raise WindowTooLargeError(
            f"window of {len(win.members)} cells exceeds the brute-force cap "
            f"{route.inp.window_cap}")


def _oracle_window(route: _Route, win: Window) -> bool:
    _check_cap(route, win)
    if route.final in win.members:
        seg = _window_best(route, win, route.final, 0.0)
        if seg is not None and len(seg) > 1:
            route.commit(seg)
            return True
    D = route.to_final()
    for e in _rank_endpoints(route, win, _od_score(route, route.cur)):
        seg = _window_best(route, win, e, D[e])
        if seg is not None and _segment_ok(route, seg):
            route.commit(seg)
            return True
    return False


def _drive(inp: PlannerInput, step: Callable[[_Route, Window], bool], algo: str,
           trace: bool) -> RoutePlan:
    route = _Route(inp, trace)
    for _ in range(inp.road.n + 1):
        if route.cur == route.final:
            break
        win = khop_window(inp.road, route.cur, inp.k)
        if not step(route, win):
            route.fallback(inp.k)
    else:  # pragma: no cover - each window adds at least one new cell
        raise RuntimeError("route did not reach the destination")
    return route.finish(algo)


def simple_greedy(inp: PlannerInput, trace: bool = False) -> RoutePlan:
    """Hop to the neighbour with the most requests from the current cell."""
    route = _Route(inp, trace)
    g = inp.road
    while route.cur != route.final:
        cur = route.cur
        D = route.to_final()
        cands = {}
        for q in g.adjacency[cur]:
            if route.visited[q]:
                continue
            if route.fits(route.length + g.edge_length[(cur, q)] + D[q]):
                cands[q] = float(route.W[cur, q])
        route.log_step(stage="simple", node=cur, candidates=cands)
        best = min(cands, key=lambda c: (-cands[c], c), default=None)
        if best is not None and cands[best] > 0:
            route.commit([cur, best])
        else:
            route.fallback(1)
    return route.finish("simple")


def backward_greedy(inp: PlannerInput, trace: bool = False) -> RoutePlan:
    return _drive(inp, lambda r, w: _greedy_window(r, w, "backward"), "backward", trace)


def forward_greedy(inp: PlannerInput, trace: bool = False) -> RoutePlan:
    return _drive(inp, lambda r, w: _greedy_window(r, w, "forward"), "forward", trace)


def demand_only_baseline(inp: PlannerInput, trace: bool = False) -> RoutePlan:
    """Same windows, but scores cells by total outgoing demand, ignoring destinations."""
    return _drive(inp, lambda r, w: _greedy_window(r, w, "demand_only"), "demand_only", trace)


def oracle_route(inp: PlannerInput, trace: bool = False) -> RoutePlan:
    return _drive(inp, _oracle_window, "oracle", trace)


def shortest_path_baseline(inp: PlannerInput, trace: bool = False) -> RoutePlan:
    path, _ = shortest_path(inp.road, inp.start, inp.final_dest)
    obj = path_expected_requests(inp.demand, path, inp.slot)
    windows = [(inp.start, inp.final_dest)] if len(path) > 1 else []
    return RoutePlan(path, obj, windows, "shortest", [], [] if trace else None)


def select_window_endpoint(inp: PlannerInput, w: Window) -> int | None:
    """Window member with the most requests from ``inp.start`` that keeps the trip feasible."""
    ranked = _rank_endpoints(_Route(inp), w, lambda m: float(inp.demand.matrix(inp.slot)[inp.start, m]))
    return ranked[0] if ranked else FALLBACK


def brute_force_window_path(inp: PlannerInput, w: Window, endpoint: int) -> RoutePlan:
    """Best feasible simple path ``inp.start -> endpoint`` inside ``w``."""
    route = _Route(inp)
    _check_cap(route, w)
    if endpoint == inp.start:
        return route.finish("oracle")
    tail = 0.0 if endpoint == inp.final_dest else float(route.to_final()[endpoint])
    seg = _window_best(route, w, endpoint, tail)
    if seg is None:
        raise NoPathError(f"no feasible path to {endpoint} inside the window")
    route.commit(seg)
    return route.finish("oracle")


_DISPATCH = {
    "simple": simple_greedy,
    "backward": backward_greedy,
    "forward": forward_greedy,
    "oracle": oracle_route,
    "shortest": shortest_path_baseline,
    "demand_only": demand_only_baseline,
}


def recommend_route(algo: str, inp: PlannerInput, trace: bool = False) -> RoutePlan:
    try:
        planner = _DISPATCH[algo]
    except KeyError:
        raise ValueError(f"unknown algorithm {algo!r}; choose from {', '.join(ALGORITHMS)}") from None
    return planner(inp, trace)
