import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from windroute.demand import ODDemandModel, read_model
from windroute.grid import grid_from_shape

DATA = Path(__file__).parent / "data"

# numba compiles on first use; keep hypothesis from treating that as a slow example
settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# filled by test_acceptance.py, printed once at the end of the run
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda s: int(s.split()[0])):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {name}: {detail}")


def random_model(rng: np.random.Generator, n: int, density: float = 0.3, slot: int = 0,
                 top: int = 4) -> ODDemandModel:
    weights = {}
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i != j and rng.random() < density:
                weights[(slot, i, j)] = float(rng.integers(1, top + 1))
    return ODDemandModel(n, 15, weights)


@pytest.fixture(scope="session")
def golden5():
    spec = json.loads((DATA / "grid5x5_oracle_k2.json").read_text())
    road = grid_from_shape(5, 5)
    model = read_model(DATA / "grid5x5_demand.csv", 25, 15)
    return spec, road, model
