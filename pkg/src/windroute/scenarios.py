"""Small hand-built instances used by tests, the CLI and the docs.

The eight-cell road graph carries lengths chosen so that
``SP(1,4) = 6`` along 1-2-3-4, the detour 1-5-6-4 is 8 long, ``SP(6,4) = 3`` by the
direct edge and 6-7-8-4 is 6 long.
"""
from __future__ import annotations

from datetime import datetime, timedelta

from .demand import ODDemandModel, RideOrder, model_from_orders
from .grid import RoadGraph, grid_from_shape

T0 = datetime(2019, 2, 1, 8, 0)

EXAMPLE_EDGES = {
    (1, 2): 2.0, (2, 3): 2.0, (3, 4): 2.0,
    (1, 5): 2.0, (5, 6): 3.0, (6, 4): 3.0,
    (6, 7): 2.0, (7, 8): 2.0, (8, 4): 2.0,
}


def example_road() -> RoadGraph:
    return RoadGraph.from_edges(8, EXAMPLE_EDGES)


def two_rider_orders() -> dict[str, RideOrder]:
    """The onboard order and the two in-transit requests, all bound for cell 4."""
    return {
        "o": RideOrder(1, 4, T0),
        "o1": RideOrder(6, 4, T0 + timedelta(minutes=1)),
        "o2": RideOrder(7, 4, T0 + timedelta(minutes=2)),
    }


# (origin, dest) of every request: 1->2 plus 2,3 -> 4 lie along 1-2-3-4; the
# busier cells 5 and 6 send riders to 2, 3 and 7, none of them to 4
TOY_REQUESTS = [(1, 2), (2, 4), (3, 4), (5, 2), (5, 3), (6, 3), (6, 7)]


def toy_orders() -> list[RideOrder]:
    return [RideOrder(s, d, T0 + timedelta(seconds=10 * t))
            for t, (s, d) in enumerate(TOY_REQUESTS)]


def toy_demand(slot_minutes: int = 15) -> ODDemandModel:
    return model_from_orders(toy_orders(), 8, slot_minutes)


def corner_pairs_instance(slot: int = 0) -> tuple[RoadGraph, ODDemandModel]:
    """19 x 19 grid with w(1,2) = 3, w(2,21) = 1 and nothing from 1 to 21."""
    g = grid_from_shape(19, 19)
    return g, ODDemandModel(g.n, 15, {(slot, 1, 2): 3.0, (slot, 2, 21): 1.0})
