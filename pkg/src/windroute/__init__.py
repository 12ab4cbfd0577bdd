"""Detour-constrained, origin-destination-aware route recommendation on grid road networks."""
from .demand import (ODDemandModel, RideOrder, TripRecord, assign_cell, build_demand_model,
                     expected_requests, ingest_trips, node_demand, path_expected_requests)
from .detour import (DetourConfig, OnboardOrder, VehicleState, detour_ratio, extra_distance_ok,
                     order_set_feasible, try_admit)
from .grid import (BBox, GridCell, RoadGraph, Window, build_grid, grid_from_shape, haversine,
                   khop_window, neighbors, path_length, shortest_path)
from .kernels import BACKEND
from .recommend import (ALGORITHMS, PlannerInput, RoutePlan, backward_greedy,
                        brute_force_window_path, demand_only_baseline, forward_greedy,
                        recommend_route, select_window_endpoint, shortest_path_baseline,
                        simple_greedy)
from .sim import SimConfig, SimMetrics, Trip, generate_synthetic_orders, run_simulation, sweep

__version__ = "0.1.0"
