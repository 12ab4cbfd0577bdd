import io
import json
from dataclasses import replace
from datetime import datetime, timedelta

import pytest
from hypothesis import given
from hypothesis import strategies as st

from windroute import scenarios
from windroute.demand import ODDemandModel, RideOrder
from windroute.grid import grid_from_shape
from windroute.sim import (METRIC_COLUMNS, LeakageError, SimConfig, Trip,
                           generate_synthetic_orders, grid_configs, make_trips,
                           pct_orders_shared, run_simulation, sweep, write_rows)

FIG5 = SimConfig(start=1, dest=4)


@pytest.fixture(scope="module")
def fig5():
    road = scenarios.example_road()
    orders, demand = generate_synthetic_orders(road, "figure5")
    return road, demand, orders


def test_pct_shared_by_hand():
    assert pct_orders_shared([]) == 0.0
    assert pct_orders_shared([[(0, 1), (1, 3)]]) == 0.0       # touching is not sharing
    assert pct_orders_shared([[(0, 2), (1, 3), (5, 6)]]) == pytest.approx(200 / 3)
    # orders on different trips never share
    assert pct_orders_shared([[(0, 3)], [(0, 3)]]) == 0.0


def test_toy_road_metrics_by_hand(fig5):
    road, demand, orders = fig5
    m = run_simulation(replace(FIG5, algo="backward"), road, demand, orders)
    # path 1-2-3-4: loads per hop are 1 (1->2), 1 (2->4), 2 (2->4, 3->4)
    assert m.orders_served == 3
    assert m.vehicle_utilization == pytest.approx(4 / 12)
    assert m.passengers_per_grid == pytest.approx(4 / 3)
    assert m.pct_orders_shared == pytest.approx(200 / 3)
    assert m.mean_query_seconds > 0
    assert {(s.order.o_s, s.order.o_d) for s in m.served} == {(1, 2), (2, 4), (3, 4)}


def test_toy_demand_only_serves_fewer(fig5):
    road, demand, orders = fig5
    m = run_simulation(replace(FIG5, algo="demand_only"), road, demand, orders)
    assert m.orders_served == 0
    assert not m.pct_defined


def test_capacity_limits_admission(fig5):
    road, demand, orders = fig5
    m = run_simulation(replace(FIG5, capacity=1), road, demand, orders)
    assert m.orders_served == 2
    assert m.orders_rejected >= 1


def test_leakage_is_refused():
    road = scenarios.example_road()
    t = datetime(2019, 2, 1, 8)
    demand = ODDemandModel(8, 15, {(32, 1, 2): 1.0}, train_start=t, train_end=t + timedelta(days=1))
    with pytest.raises(LeakageError):
        run_simulation(FIG5, road, demand, [RideOrder(1, 2, t)])


def test_primary_rider_served_once():
    road = grid_from_shape(3, 3)
    t = datetime(2019, 2, 1, 8)
    o = RideOrder(1, 9, t)
    demand = ODDemandModel(9, 15, {})
    trips = [Trip(1, 9, t, o), Trip(1, 9, t, o)]
    m = run_simulation(SimConfig(algo="shortest"), road, demand, [o], trips)
    assert m.orders_served == 1


def test_make_trips():
    t = datetime(2019, 2, 1, 8)
    orders = [RideOrder(1, 2, t + timedelta(minutes=20 * i)) for i in range(5)]
    fixed = make_trips(replace(FIG5, n_trips=3), orders)
    assert [(x.start, x.final_dest) for x in fixed] == [(1, 4)] * 3
    sampled = make_trips(SimConfig(n_trips=3, seed=1), orders)
    assert len(sampled) == 3 and all(x.primary in orders for x in sampled)
    assert sampled == make_trips(SimConfig(n_trips=3, seed=1), orders)
    assert [x.time for x in sampled] == sorted(x.time for x in sampled)


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(algo="nope")
    with pytest.raises(ValueError):
        SimConfig(start=1)
    with pytest.raises(ValueError):
        SimConfig(d=0.5)


def test_sweep_rows_and_writers(fig5):
    road, demand, orders = fig5
    cfgs = grid_configs(FIG5, ["shortest", "backward"], [1, 2], [1.0, 1.5])
    assert len(cfgs) == 8
    rows = sweep(cfgs, road, demand, orders)
    assert [list(r) for r in rows] == [METRIC_COLUMNS] * 8
    buf = io.StringIO()
    write_rows(rows, buf, "csv")
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(METRIC_COLUMNS) and len(lines) == 9
    buf = io.StringIO()
    write_rows(rows, buf, "json", {"seed": 0})
    doc = json.loads(buf.getvalue())
    assert doc["meta"] == {"seed": 0} and len(doc["rows"]) == 8


def test_synthetic_generator_is_seeded():
    road = grid_from_shape(5, 5)
    a, ma = generate_synthetic_orders(road, "clustered", seed=4)
    b, mb = generate_synthetic_orders(road, "clustered", seed=4)
    c, _ = generate_synthetic_orders(road, "clustered", seed=5)
    assert a == b and ma.weights == mb.weights and a != c
    u, mu = generate_synthetic_orders(road, "uniform", seed=0, days=2, orders_per_day=50)
    assert sum(mu.weights.values()) == pytest.approx(50)
    assert all(o.o_s != o.o_d for o in u)
    with pytest.raises(ValueError):
        generate_synthetic_orders(road, "figure5")
    with pytest.raises(ValueError):
        generate_synthetic_orders(road, "gaussian")


@given(seed=st.integers(0, 10_000), algo=st.sampled_from(["backward", "forward", "simple",
                                                         "demand_only", "shortest"]),
       d=st.floats(1.0, 2.0), cap=st.integers(1, 4))
def test_served_orders_respect_threshold_and_capacity(seed, algo, d, cap):
    road = grid_from_shape(5, 5)
    orders, demand = generate_synthetic_orders(road, "clustered", seed=seed, days=1,
                                               orders_per_day=60)
    cfg = SimConfig(algo=algo, k=2, d=d, capacity=cap, seed=seed, n_trips=8)
    m = run_simulation(cfg, road, demand, orders, record_events=True)
    assert all(s.ratio <= d for s in m.served)
    assert all(max(e["load"], default=0) <= cap for e in m.events)
    assert 0.0 <= m.vehicle_utilization <= 1.0
    assert m.orders_served + m.orders_rejected == m.orders_offered
