import itertools
import math

import networkx as nx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from reference import lex_shortest, to_nx
from windroute import scenarios
from windroute.grid import (DC_BBOX, NYC_BBOX, BBox, GridError, InvalidPathError, RoadGraph,
                            UnknownCellError, build_grid, grid_from_shape, haversine,
                            khop_window, neighbors, path_length, shortest_path, validate_path)


def test_haversine_one_degree_on_equator():
    assert haversine((0, 0), (0, 1)) == pytest.approx(6371 * math.pi / 180, rel=1e-12)
    assert haversine((40.7, -74.0), (40.7, -74.0)) == 0.0


def test_presets_cell_counts():
    nyc = build_grid(NYC_BBOX, 2.5)
    dc = build_grid(DC_BBOX, 2.5)
    assert (nyc.nrows, nyc.ncols, nyc.n) == (20, 20, 400)
    assert (dc.nrows, dc.ncols, dc.n) == (7, 9, 63)


def test_tiles_never_exceed_cell_size():
    g = build_grid(NYC_BBOX, 2.5)
    lateral = [w for (i, j), w in g.edge_length.items()
               if g.cell(i).row == g.cell(j).row or g.cell(i).col == g.cell(j).col]
    assert max(lateral) <= 2.5 + 1e-9


def test_ids_are_row_major_from_south_west():
    g = grid_from_shape(3, 4)
    c = g.cell(7)
    assert (c.row, c.col) == (2, 3)
    assert g.cell(1).lat < g.cell(5).lat
    assert g.cell(1).lon < g.cell(2).lon


def test_eight_connectivity_matches_king_graph():
    g = grid_from_shape(4, 5)
    king = nx.Graph()
    for r, c in itertools.product(range(4), range(5)):
        for dr, dc in itertools.product((-1, 0, 1), repeat=2):
            if (dr, dc) != (0, 0) and 0 <= r + dr < 4 and 0 <= c + dc < 5:
                king.add_edge(r * 5 + c + 1, (r + dr) * 5 + c + dc + 1)
    assert set(map(frozenset, king.edges())) == set(map(frozenset, to_nx(g).edges()))
    assert neighbors(g, 1) == {2, 6, 7}
    assert len(neighbors(g, 7)) == 8


def test_edge_lengths_symmetric_positive():
    g = build_grid(DC_BBOX, 2.5)
    for (i, j), w in g.edge_length.items():
        assert w > 0 and g.edge_length[(j, i)] == w


def test_bad_inputs():
    with pytest.raises(GridError):
        BBox(10, 10, 5, 20)
    with pytest.raises(GridError):
        BBox(-95, 0, 10, 10)
    with pytest.raises(GridError):
        build_grid(NYC_BBOX, 0)
    with pytest.raises(GridError):
        grid_from_shape(0, 3)
    with pytest.raises(GridError):
        RoadGraph.from_edges(3, {(1, 1): 1.0})
    with pytest.raises(GridError):
        RoadGraph.from_edges(3, {(1, 2): 0.0})
    g = grid_from_shape(3, 3)
    with pytest.raises(UnknownCellError):
        g.cell(10)
    with pytest.raises(UnknownCellError):
        neighbors(g, 0)
    with pytest.raises(GridError):
        khop_window(g, 5, 0)


def test_example_road_lengths():
    g = scenarios.example_road()
    assert shortest_path(g, 1, 4) == ([1, 2, 3, 4], 6.0)
    assert shortest_path(g, 6, 4)[1] == 3.0
    assert path_length(g, [1, 5, 6, 4]) == 8.0
    assert path_length(g, [6, 7, 8, 4]) == 6.0


def test_path_length_and_validation():
    g = grid_from_shape(3, 3)
    assert path_length(g, [5]) == 0.0
    assert shortest_path(g, 5, 5) == ([5], 0.0)
    p1, p2 = [1, 2, 3], [3, 6, 9]
    assert path_length(g, p1 + p2[1:]) == pytest.approx(path_length(g, p1) + path_length(g, p2))
    with pytest.raises(InvalidPathError):
        path_length(g, [1, 3])
    with pytest.raises(InvalidPathError):
        validate_path(g, [1, 2, 1])
    with pytest.raises(InvalidPathError):
        validate_path(g, [])


def test_four_by_four_corner_to_corner_is_three_diagonals():
    # planar uniform grid: unit lateral edges, sqrt(2) diagonals
    edges = {}
    for r, c in itertools.product(range(4), repeat=2):
        for dr, dc in ((0, 1), (1, -1), (1, 0), (1, 1)):
            if 0 <= r + dr < 4 and 0 <= c + dc < 4:
                edges[(r * 4 + c + 1, (r + dr) * 4 + c + dc + 1)] = math.hypot(dr, dc)
    g = RoadGraph.from_edges(16, edges)
    G = to_nx(g)
    brute = min(nx.path_weight(G, p, "weight") for p in nx.all_simple_paths(G, 1, 16))
    assert brute == pytest.approx(3 * math.sqrt(2), rel=1e-12)
    assert shortest_path(g, 1, 16) == ([1, 6, 11, 16], pytest.approx(brute, rel=1e-12))


def test_shortest_path_ties_take_smallest_ids():
    g = RoadGraph.from_edges(4, {(1, 2): 1, (2, 4): 1, (1, 3): 1, (3, 4): 1})
    assert shortest_path(g, 1, 4)[0] == [1, 2, 4]
    assert shortest_path(g, 4, 1)[0] == [4, 2, 1]


def test_khop_examples():
    g = grid_from_shape(19, 19)
    assert khop_window(g, 1, 1).members == {1, 2, 20, 21}
    assert len(khop_window(g, 181, 1)) == 9
    assert len(khop_window(g, 181, 2)) == 25


@given(r=st.integers(1, 7), c=st.integers(1, 7), data=st.data())
def test_shortest_path_agrees_with_networkx(r, c, data):
    g = grid_from_shape(r, c, cell_km=data.draw(st.floats(0.3, 3.0)))
    s = data.draw(st.integers(1, g.n))
    d = data.draw(st.integers(1, g.n))
    path, length = shortest_path(g, s, d)
    G = to_nx(g)
    assert length == pytest.approx(nx.dijkstra_path_length(G, s, d), rel=1e-12, abs=1e-12)
    assert path == (lex_shortest(G, s, d) if s != d else [s])
    validate_path(g, path)
    assert shortest_path(g, d, s)[1] == pytest.approx(length, rel=1e-12)


@given(r=st.integers(1, 9), c=st.integers(1, 9), k=st.integers(1, 4), data=st.data())
def test_khop_is_chebyshev_ball(r, c, k, data):
    g = grid_from_shape(r, c)
    center = g.cell(data.draw(st.integers(1, g.n)))
    w = khop_window(g, center.id, k)
    expect = {x.id for x in g.cells
              if max(abs(x.row - center.row), abs(x.col - center.col)) <= k}
    assert w.members == expect
    assert set(nx.ego_graph(to_nx(g), center.id, radius=k)) == expect
    if k > 1:
        assert khop_window(g, center.id, k - 1).members <= w.members
