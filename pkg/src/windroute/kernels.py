"""Hot inner loops: restricted Dijkstra, the path objective and the window DFS.

Each kernel exists twice. The ``*_nb`` variants are loop-style and compiled
with numba; the ``*_np`` variants use numpy/heapq and run without compilation.
The public names are bound at import time according to ``WINDROUTE_NUMBA``.

Graph arrays are indexed by cell id (row 0 unused). ``nbr[u]`` lists the
neighbours of ``u`` in ascending id order, padded with -1; ``nbr_len[u]``
holds the matching edge lengths.
"""
import heapq

import numpy as np

from ._accel import HAVE_NUMBA, USE_NUMBA, njit

# relative slack used when comparing float path lengths and objectives
REL_TOL = 1e-9


def _sssp_np(nbr, nbr_len, source, blocked):
    n = nbr.shape[0]
    adj = nbr.tolist()
    lens = nbr_len.tolist()
    blk = blocked.tolist()
    dist = [float("inf")] * n
    done = [False] * n
    dist[source] = 0.0
    heap = [(0.0, int(source))]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v, w in zip(adj[u], lens[u]):
            if v < 0:
                break
            if blk[v] or done[v]:
                continue
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return np.asarray(dist, dtype=np.float64)


@njit
def _sssp_nb(nbr, nbr_len, source, blocked):
    n = nbr.shape[0]
    dist = np.full(n, np.inf)
    done = np.zeros(n, dtype=np.bool_)
    dist[source] = 0.0
    heap = [(0.0, source)]
    while len(heap) > 0:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for t in range(nbr.shape[1]):
            v = nbr[u, t]
            if v < 0:
                break
            if blocked[v] or done[v]:
                continue
            nd = d + nbr_len[u, t]
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def _path_objective_np(W, path):
    p = np.asarray(path, dtype=np.int64)
    if p.size < 2:
        return 0.0
    return float(np.triu(W[np.ix_(p, p)], 1).sum())


@njit
def _path_objective_nb(W, path):
    total = 0.0
    for a in range(path.shape[0]):
        for b in range(a + 1, path.shape[0]):
            total += W[path[a], path[b]]
    return total


def _best_path_np(adj, adj_len, W, inw0, start, end, lb, max_len):
    m = adj.shape[0]
    if start == end:
        return np.array([start], dtype=np.int64), 0.0, 0.0
    adj_l = adj.tolist()
    len_l = adj_len.tolist()
    lb_l = lb.tolist()
    on = [False] * m
    path = [start]
    on[start] = True
    best = None
    best_obj = -1.0
    best_len = 0.0

    def visit(u, length, obj, inw):
        nonlocal best, best_obj, best_len
        for v, w in zip(adj_l[u], len_l[u]):
            if v < 0:
                break
            if on[v]:
                continue
            nl = length + w
            if nl + lb_l[v] > max_len:
                continue
            nobj = obj + inw[v]
            if v == end:
                if nobj > best_obj + REL_TOL * max(1.0, abs(best_obj)):
                    best = path + [v]
                    best_obj = nobj
                    best_len = nl
                continue
            on[v] = True
            path.append(v)
            visit(v, nl, nobj, inw + W[v])
            path.pop()
            on[v] = False

    visit(start, 0.0, 0.0, np.asarray(inw0, dtype=np.float64))
    if best is None:
        return np.empty(0, dtype=np.int64), -1.0, 0.0
    return np.array(best, dtype=np.int64), float(best_obj), float(best_len)


@njit
def _best_path_nb(adj, adj_len, W, inw0, start, end, lb, max_len):
    m = adj.shape[0]
    deg = adj.shape[1]
    if start == end:
        out = np.empty(1, dtype=np.int64)
        out[0] = start
        return out, 0.0, 0.0
    node = np.empty(m, dtype=np.int64)
    ptr = np.zeros(m, dtype=np.int64)
    plen = np.zeros(m)
    pobj = np.zeros(m)
    inw = np.empty((m, m))
    on = np.zeros(m, dtype=np.bool_)
    best = np.empty(m, dtype=np.int64)
    best_n = 0
    best_obj = -1.0
    best_len = 0.0

    depth = 0
    node[0] = start
    on[start] = True
    inw[0, :] = inw0
    while depth >= 0:
        u = node[depth]
        if u == end:
            if pobj[depth] > best_obj + REL_TOL * max(1.0, abs(best_obj)):
                best_obj = pobj[depth]
                best_len = plen[depth]
                best_n = depth + 1
                best[:best_n] = node[:best_n]
            on[u] = False
            depth -= 1
            continue
        pushed = False
        while ptr[depth] < deg:
            t = ptr[depth]
            ptr[depth] += 1
            v = adj[u, t]
            if v < 0:
                ptr[depth] = deg
                break
            if on[v]:
                continue
            nl = plen[depth] + adj_len[u, t]
            if nl + lb[v] > max_len:
                continue
            d1 = depth + 1
            node[d1] = v
            ptr[d1] = 0
            plen[d1] = nl
            pobj[d1] = pobj[depth] + inw[depth, v]
            inw[d1, :] = inw[depth, :] + W[v, :]
            on[v] = True
            depth = d1
            pushed = True
            break
        if not pushed:
            on[u] = False
            depth -= 1
    if best_n == 0:
        return np.empty(0, dtype=np.int64), -1.0, 0.0
    return best[:best_n].copy(), best_obj, best_len


if USE_NUMBA:
    _sssp, _path_objective, _best_path = _sssp_nb, _path_objective_nb, _best_path_nb
else:
    _sssp, _path_objective, _best_path = _sssp_np, _path_objective_np, _best_path_np

BACKEND = "numba" if USE_NUMBA else "numpy"


def sssp(nbr, nbr_len, source, blocked):
    """Distances from ``source`` to every id, never entering a ``blocked`` cell.

    Unreachable ids get ``inf``. ``source`` itself is expanded even if blocked.
    """
    return _sssp(nbr, nbr_len, np.int64(source), blocked)


def path_objective(W, path):
    """Sum of ``W[p[a], p[b]]`` over all index pairs ``a < b`` of the path."""
    return float(_path_objective(W, np.asarray(path, dtype=np.int64)))


def best_path(adj, adj_len, W, inw0, start, end, lb, max_len):
    """Exhaustive DFS over simple ``start -> end`` paths in a local graph.

    Maximises the accumulated pair objective, where stepping onto ``v`` earns
    ``inw[v]`` (``inw0`` plus the ``W`` rows of every node already on the path).
    Branches whose length plus the lower bound ``lb`` exceed ``max_len`` are cut.
    Neighbour rows must be sorted so the first optimum found is the
    lexicographically smallest one. Returns ``(path, objective, length)``, with
    an empty path when nothing fits the length limit.
    """
    path, obj, length = _best_path(
        adj, adj_len, W, np.asarray(inw0, dtype=np.float64),
        np.int64(start), np.int64(end), lb, float(max_len),
    )
    return path, float(obj), float(length)


__all__ = ["BACKEND", "HAVE_NUMBA", "REL_TOL", "best_path", "path_objective", "sssp"]
