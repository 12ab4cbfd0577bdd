"""Grid road network: cells, 8-connected adjacency, haversine edge lengths."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels

EARTH_RADIUS_KM = 6371.0
KM_PER_DEG = EARTH_RADIUS_KM * math.pi / 180.0


class GridError(ValueError):
    """Invalid grid geometry or parameter."""


class UnknownCellError(KeyError):
    pass


class InvalidPathError(ValueError):
    pass


class NoPathError(ValueError):
    pass


@dataclass(frozen=True)
class BBox:
    min_lat: float
    min_lon: float
    max_lat: float
    max_lon: float

    def __post_init__(self):
        for lat in (self.min_lat, self.max_lat):
            if not -90.0 <= lat <= 90.0:
                raise GridError(f"latitude out of range: {lat}")
        for lon in (self.min_lon, self.max_lon):
            if not -180.0 <= lon <= 180.0:
                raise GridError(f"longitude out of range: {lon}")
        if not (self.max_lat > self.min_lat and self.max_lon > self.min_lon):
            raise GridError(f"degenerate bounding box: {self}")

    @property
    def height_km(self) -> float:
        mid_lon = 0.5 * (self.min_lon + self.max_lon)
        return haversine((self.min_lat, mid_lon), (self.max_lat, mid_lon))

    @property
    def width_km(self) -> float:
        mid_lat = 0.5 * (self.min_lat + self.max_lat)
        return haversine((mid_lat, self.min_lon), (mid_lat, self.max_lon))


# Presets at 2.5 km: NYC_BBOX gives 20 x 20 = 400 tiles, DC_BBOX gives 7 x 9 = 63.
NYC_BBOX = BBox(40.55, -74.20, 40.99, -73.62)
DC_BBOX = BBox(38.82, -77.12, 38.97, -76.88)


@dataclass(frozen=True)
class GridCell:
    id: int
    row: int
    col: int
    lat: float
    lon: float


def haversine(a: Sequence[float], b: Sequence[float]) -> float:
    """Great-circle distance in km between two ``(lat, lon)`` pairs."""
    lat1, lon1 = math.radians(a[0]), math.radians(a[1])
    lat2, lon2 = math.radians(b[0]), math.radians(b[1])
    h = (math.sin((lat2 - lat1) / 2) ** 2
         + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2)
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


class RoadGraph:
    """Undirected weighted graph over cell ids ``1..n``.

    Built either from a bbox (``build_grid``), an explicit shape
    (``grid_from_shape``) or an arbitrary edge list (``from_edges``, used for
    hand-drawn fixtures). Treat instances as immutable.
    """

    def __init__(self, cells: Sequence[GridCell], edges: dict[tuple[int, int], float],
                 nrows: int | None = None, ncols: int | None = None,
                 bbox: BBox | None = None):
        self.cells = tuple(cells)
        self.n = len(self.cells)
        for k, c in enumerate(self.cells, start=1):
            if c.id != k:
                raise GridError("cell ids must be 1..n in order")
        self.nrows, self.ncols, self.bbox = nrows, ncols, bbox

        adj: dict[int, set[int]] = {i: set() for i in range(1, self.n + 1)}
        lengths: dict[tuple[int, int], float] = {}
        for (i, j), w in edges.items():
            if i == j or not (1 <= i <= self.n and 1 <= j <= self.n):
                raise GridError(f"bad edge {(i, j)}")
            if not w > 0:
                raise GridError(f"edge {(i, j)} must have positive length")
            adj[i].add(j)
            adj[j].add(i)
            lengths[(i, j)] = lengths[(j, i)] = float(w)
        self.adjacency = {i: tuple(sorted(s)) for i, s in adj.items()}
        self.edge_length = lengths

        deg = max((len(v) for v in self.adjacency.values()), default=0)
        self.nbr = np.full((self.n + 1, max(deg, 1)), -1, dtype=np.int64)
        self.nbr_len = np.zeros((self.n + 1, max(deg, 1)), dtype=np.float64)
        for i, ns in self.adjacency.items():
            for t, j in enumerate(ns):
                self.nbr[i, t] = j
                self.nbr_len[i, t] = lengths[(i, j)]
        self.nbr.setflags(write=False)
        self.nbr_len.setflags(write=False)
        self._sp_cache: dict[int, np.ndarray] = {}

    @classmethod
    def from_edges(cls, n: int, edges: dict[tuple[int, int], float]) -> "RoadGraph":
        cells = [GridCell(i, 1, i, 0.0, 0.0) for i in range(1, n + 1)]
        return cls(cells, edges)

    def __contains__(self, cell) -> bool:
        return isinstance(cell, (int, np.integer)) and 1 <= cell <= self.n

    def __repr__(self):
        shape = f"{self.nrows}x{self.ncols}" if self.nrows else f"n={self.n}"
        return f"RoadGraph({shape})"

    def check(self, cell: int) -> int:
        if cell not in self:
            raise UnknownCellError(cell)
        return int(cell)

    def cell(self, cell: int) -> GridCell:
        return self.cells[self.check(cell) - 1]

    def distances_from(self, source: int) -> np.ndarray:
        """Unrestricted shortest distances from ``source`` (cached)."""
        d = self._sp_cache.get(source)
        if d is None:
            d = kernels.sssp(self.nbr, self.nbr_len, self.check(source),
                             np.zeros(self.n + 1, dtype=np.bool_))
            d.setflags(write=False)
            self._sp_cache[source] = d
        return d

    def sp_length(self, s: int, d: int) -> float:
        return float(self.distances_from(d)[self.check(s)])


def _tile_grid(bbox: BBox, nrows: int, ncols: int) -> RoadGraph:
    dlat = (bbox.max_lat - bbox.min_lat) / nrows
    dlon = (bbox.max_lon - bbox.min_lon) / ncols
    cells = []
    for r in range(1, nrows + 1):
        for c in range(1, ncols + 1):
            cells.append(GridCell((r - 1) * ncols + c, r, c,
                                  bbox.min_lat + (r - 0.5) * dlat,
                                  bbox.min_lon + (c - 0.5) * dlon))
    edges = {}
    for cell in cells:
        for dr in (0, 1):
            for dc in (-1, 0, 1):
                if dr == 0 and dc <= 0:
                    continue
                r, c = cell.row + dr, cell.col + dc
                if 1 <= r <= nrows and 1 <= c <= ncols:
                    other = cells[(r - 1) * ncols + c - 1]
                    edges[(cell.id, other.id)] = haversine((cell.lat, cell.lon),
                                                           (other.lat, other.lon))
    return RoadGraph(cells, edges, nrows, ncols, bbox)


def build_grid(bbox: BBox | Sequence[float], cell_size: float) -> RoadGraph:
    """Tile ``bbox`` with ``ceil(height/cell) x ceil(width/cell)`` cells.

    The bbox is split evenly, so tiles are at most ``cell_size`` km on a side.
    Row 1 is the southern edge, column 1 the western edge.
    """
    if not isinstance(bbox, BBox):
        bbox = BBox(*bbox)
    if not cell_size > 0:
        raise GridError("cell_size must be positive")
    nrows = max(1, math.ceil(bbox.height_km / cell_size - 1e-9))
    ncols = max(1, math.ceil(bbox.width_km / cell_size - 1e-9))
    return _tile_grid(bbox, nrows, ncols)


def grid_from_shape(nrows: int, ncols: int, cell_km: float = 1.0,
                    origin: tuple[float, float] = (0.0, 0.0)) -> RoadGraph:
    """Synthetic ``nrows x ncols`` grid with ~``cell_km`` tiles, south-west corner at ``origin``."""
    if nrows < 1 or ncols < 1:
        raise GridError("grid needs at least one row and column")
    if not cell_km > 0:
        raise GridError("cell_km must be positive")
    lat0, lon0 = origin
    dlat = cell_km / KM_PER_DEG
    dlon = cell_km / (KM_PER_DEG * math.cos(math.radians(lat0)))
    bbox = BBox(lat0, lon0, lat0 + nrows * dlat, lon0 + ncols * dlon)
    return _tile_grid(bbox, nrows, ncols)


def neighbors(g: RoadGraph, cell: int) -> set[int]:
    return set(g.adjacency[g.check(cell)])


def path_length(g: RoadGraph, path: Iterable[int]) -> float:
    p = list(path)
    total = 0.0
    for a, b in zip(p, p[1:]):
        try:
            total += g.edge_length[(a, b)]
        except KeyError:
            raise InvalidPathError(f"cells {a} and {b} are not adjacent") from None
    if len(p) == 1:
        g.check(p[0])
    return total


def validate_path(g: RoadGraph, path: Sequence[int]) -> None:
    if not path:
        raise InvalidPathError("empty path")
    if len(set(path)) != len(path):
        raise InvalidPathError("path repeats a cell")
    path_length(g, path)


def _close(a: float, b: float) -> bool:
    if not (math.isfinite(a) and math.isfinite(b)):
        return False
    return abs(a - b) <= kernels.REL_TOL * max(1.0, abs(a), abs(b))


def trace_shortest(g: RoadGraph, s: int, dist_to_target: np.ndarray, target: int) -> list[int]:
    """Walk from ``s`` to ``target`` along the smallest-id tight edge at every step.

    ``dist_to_target`` must be distances to ``target`` (possibly restricted);
    the walk then yields the lexicographically smallest shortest path.
    """
    if not np.isfinite(dist_to_target[s]):
        raise NoPathError(f"no path from {s} to {target}")
    path = [s]
    cur = s
    while cur != target:
        for j in g.adjacency[cur]:
            if _close(g.edge_length[(cur, j)] + dist_to_target[j], dist_to_target[cur]):
                cur = j
                break
        else:  # pragma: no cover - guarded by the finiteness check
            raise NoPathError(f"broken distance field at {cur}")
        path.append(cur)
    return path


def shortest_path(g: RoadGraph, s: int, d: int) -> tuple[list[int], float]:
    """Minimum-length path, ties broken towards the smallest id sequence."""
    s, d = g.check(s), g.check(d)
    if s == d:
        return [s], 0.0
    dist = g.distances_from(d)
    path = trace_shortest(g, s, dist, d)
    return path, path_length(g, path)


@dataclass(frozen=True)
class Window:
    center: int
    k: int
    members: frozenset[int]

    def __contains__(self, cell):
        return cell in self.members

    def __len__(self):
        return len(self.members)


def khop_window(g: RoadGraph, center: int, k: int) -> Window:
    """Cells within ``k`` unweighted adjacency hops of ``center``."""
    if k < 1:
        raise GridError(f"k must be >= 1, got {k}")
    center = g.check(center)
    depth = {center: 0}
    queue = deque([center])
    while queue:
        u = queue.popleft()
        if depth[u] == k:
            continue
        for v in g.adjacency[u]:
            if v not in depth:
                depth[v] = depth[u] + 1
                queue.append(v)
    return Window(center, k, frozenset(depth))
