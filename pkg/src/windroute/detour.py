"""Passenger detour constraints and order admission."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .demand import RideOrder
from .grid import InvalidPathError, RoadGraph, path_length


class InvalidPlanError(ValueError):
    """An order's endpoints are missing from the plan or appear out of order."""


@dataclass(frozen=True)
class DetourConfig:
    d: float = 1.5

    def __post_init__(self):
        if not self.d >= 1.0:
            raise ValueError(f"detour threshold must be >= 1, got {self.d}")


@dataclass
class OnboardOrder:
    order: RideOrder
    traveled_km: float = 0.0
    picked_up: bool = True


@dataclass
class VehicleState:
    position: int
    capacity: int = 4
    onboard: list[OnboardOrder] = field(default_factory=list)
    route_so_far: list[int] = field(default_factory=list)
    plan: list[int] | None = None

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")
        if not self.route_so_far:
            self.route_so_far = [self.position]

    @property
    def load(self) -> int:
        return sum(o.order.passengers for o in self.onboard if o.picked_up)


def detour_ratio(g: RoadGraph, traveled: Sequence[int], o_s: int, o_d: int) -> float:
    """Traveled length over shortest length; same-cell orders count as 1."""
    if o_s == o_d:
        return 1.0
    if not traveled or traveled[0] != o_s or traveled[-1] != o_d:
        raise InvalidPathError(f"path must run from {o_s} to {o_d}")
    return path_length(g, traveled) / g.sp_length(o_s, o_d)


@dataclass
class Feasibility:
    ok: bool
    ratios: list[float]
    offender: RideOrder | None = None
    offender_ratio: float | None = None
    offender_path: list[int] | None = None

    def __bool__(self):
        return self.ok


def _span(plan: Sequence[int], order: RideOrder) -> tuple[int, int]:
    try:
        a = plan.index(order.o_s)
        b = plan.index(order.o_d)
    except ValueError:
        raise InvalidPlanError(f"plan does not visit both ends of {order}") from None
    if b < a:
        raise InvalidPlanError(f"plan visits {order.o_d} before {order.o_s}")
    return a, b


def order_set_feasible(g: RoadGraph, plan: Sequence[int], orders: Sequence[RideOrder],
                       cfg: DetourConfig) -> Feasibility:
    """Check every order's sub-path on ``plan`` against the detour threshold.

    The reported offender is the order with the largest violating ratio.
    """
    plan = list(plan)
    ratios = []
    worst = None
    for o in orders:
        a, b = _span(plan, o)
        sub = plan[a:b + 1]
        r = detour_ratio(g, sub, o.o_s, o.o_d)
        ratios.append(r)
        if r > cfg.d and (worst is None or r > worst[1]):
            worst = (o, r, sub)
    if worst is None:
        return Feasibility(True, ratios)
    return Feasibility(False, ratios, *worst)


def extra_distance_ok(x: float, d_i: float, sp_id: float, sp_sd: float,
                      cfg: DetourConfig) -> bool:
    """``(x + d_i + sp_id) / sp_sd <= threshold`` for an onboard rider."""
    if sp_sd <= 0:
        raise ValueError("sp_sd must be positive; same-cell orders are handled upstream")
    return (x + d_i + sp_id) / sp_sd <= cfg.d


@dataclass
class Admission:
    accepted: bool
    reason: str = ""
    offender: RideOrder | None = None
    ratio: float | None = None

    def __bool__(self):
        return self.accepted


def _rider_ratio(g: RoadGraph, plan: list[int], ob: OnboardOrder) -> tuple[float, int, int]:
    o = ob.order
    if o.o_s in plan:
        a, b = _span(plan, o)
        return detour_ratio(g, plan[a:b + 1], o.o_s, o.o_d), a, b
    # origin already left behind: count the distance covered before the plan starts
    if not ob.picked_up or o.o_d not in plan:
        raise InvalidPlanError(f"plan does not cover {o}")
    b = plan.index(o.o_d)
    if o.o_s == o.o_d:
        return 1.0, 0, b
    return (ob.traveled_km + path_length(g, plan[:b + 1])) / g.sp_length(o.o_s, o.o_d), 0, b


def try_admit(g: RoadGraph, state: VehicleState, new_order: RideOrder,
              extended_plan: Sequence[int], cfg: DetourConfig) -> Admission:
    """Accept ``new_order`` iff every rider stays within the detour threshold and
    the peak load along ``extended_plan`` fits the capacity. Mutates ``state``
    on acceptance.
    """
    plan = list(extended_plan)
    riders = list(state.onboard) + [OnboardOrder(new_order, 0.0, False)]
    load = [0] * max(len(plan), 1)
    worst = None
    for ob in riders:
        r, a, b = _rider_ratio(g, plan, ob)
        if r > cfg.d and (worst is None or r > worst[1]):
            worst = (ob.order, r)
        for t in range(a, b):
            load[t] += ob.order.passengers
    if worst is not None:
        return Admission(False, "detour", worst[0], worst[1])
    if max(load) > state.capacity:
        return Admission(False, "capacity")
    state.onboard.append(OnboardOrder(new_order, 0.0, state.position == new_order.o_s))
    state.plan = plan
    return Admission(True)
