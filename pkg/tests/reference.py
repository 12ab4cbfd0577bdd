"""Slow, independent reimplementations used as test oracles.

Nothing here imports the planner internals: graphs go through networkx, path
search through ``nx.all_simple_paths`` and objectives through plain loops.
"""
from __future__ import annotations

import math

import networkx as nx

TOL = 1e-9


def to_nx(road) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(range(1, road.n + 1))
    for (i, j), w in road.edge_length.items():
        if i < j:
            G.add_edge(i, j, weight=w)
    return G


def objective(W, path) -> float:
    total = 0.0
    for a in range(len(path)):
        for b in range(a + 1, len(path)):
            total += float(W[path[a]][path[b]])
    return total


def plen(G, path) -> float:
    return sum(G[a][b]["weight"] for a, b in zip(path, path[1:]))


def hop_window(G, center, k) -> set[int]:
    return set(nx.single_source_shortest_path_length(G, center, cutoff=k))


def dist_to(G, target, blocked=()) -> dict[int, float]:
    """Dijkstra distances to ``target`` over ``G`` minus ``blocked`` (target always kept)."""
    keep = [v for v in G if v not in blocked or v == target]
    return nx.single_source_dijkstra_path_length(G.subgraph(keep), target)


def fits(x, budget) -> bool:
    return x <= budget * (1 + TOL)


def lex_shortest(G, s, t, blocked=()) -> list[int]:
    """Lexicographically smallest shortest path (ties within ``TOL``)."""
    keep = [v for v in G if v not in blocked or v in (s, t)]
    H = G.subgraph(keep)
    D = nx.single_source_dijkstra_path_length(H, t)
    path = [s]
    while path[-1] != t:
        u = path[-1]
        for v in sorted(H[u]):
            if v in D and math.isclose(H[u][v]["weight"] + D[v], D[u], rel_tol=TOL, abs_tol=TOL):
                path.append(v)
                break
        else:
            raise AssertionError("no tight edge")
    return path


def best_window_path(G, W, route, allowed, end, max_len):
    """Argmax objective over simple paths route[-1] -> end inside ``allowed``.

    Ties resolve to the lexicographically smallest path.
    """
    s = route[-1]
    H = G.subgraph(allowed)
    if end not in H:
        return None
    min_edge = min(d["weight"] for _, _, d in G.edges(data=True))
    cutoff = max(1, int(max_len / min_edge + 1e-9))
    best, best_obj = None, -math.inf
    for p in nx.all_simple_paths(H, s, end, cutoff=cutoff):
        if plen(G, p) > max_len:
            continue
        obj = objective(W, route + p[1:])
        if best is None or obj > best_obj + TOL * max(1.0, abs(best_obj)) or (
                abs(obj - best_obj) <= TOL * max(1.0, abs(best_obj)) and p < best):
            best, best_obj = p, obj
    return best


def oracle_route(road, W, start, final, k, d, window_cap=30):
    """Windowed brute-force route: solve to ``final`` when it is in the window,
    otherwise to the best-ranked feasible endpoint; fall back to ``k`` hops of
    the restricted shortest path when no endpoint works."""
    G = to_nx(road)
    sp = nx.dijkstra_path_length(G, start, final)
    budget = d * sp
    route = [start]
    length = 0.0
    while route[-1] != final:
        s = route[-1]
        win = hop_window(G, s, k)
        assert len(win) <= window_cap
        visited = set(route)
        allowed = (win - visited) | {s}
        seg = None
        if final in win:
            seg = best_window_path(G, W, route, allowed, final, budget * (1 + TOL) - length)
            if seg is not None and len(seg) < 2:
                seg = None
        if seg is None:
            D = dist_to(G, final, visited)
            ds = dist_to(G, s, (set(G) - allowed) | {final})
            if final in win and final not in visited:
                via = [ds[j] + G[j][final]["weight"] for j in G[final] if j in ds]
                if via:
                    ds[final] = min(via)
            ranked = [m for m in sorted(win)
                      if m not in visited and W[s][m] > 0 and m in ds and m in D
                      and fits(length + ds[m] + D[m], budget)]
            ranked.sort(key=lambda m: (-W[s][m], m))
            for e in ranked:
                sub = allowed - ({final} if e != final else set())
                cand = best_window_path(G, W, route, sub, e,
                                        budget * (1 + TOL) - length - D[e])
                if cand is None:
                    continue
                tail = dist_to(G, final, visited | set(cand[:-1]))
                if e in tail and fits(length + plen(G, cand) + tail[e], budget):
                    seg = cand
                    break
        if seg is None:
            seg = lex_shortest(G, s, final, visited - {s})[:k + 1]
        length += plen(G, seg)
        route += seg[1:]
    return route, objective(W, route)
