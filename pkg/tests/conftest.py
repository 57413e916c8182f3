import math

import numpy as np
import pytest
from hypothesis import settings

from xconvex.geometry import DomainSet, SamplePlan

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

INF = math.inf

# small plans keep unit tests fast; acceptance tests use the default plan
SMALL = SamplePlan(grid_per_axis=41, random_count=60, delta_grid=51)
TINY = SamplePlan(grid_per_axis=11, random_count=0, delta_grid=11)


@pytest.fixture
def small():
    return SMALL


@pytest.fixture
def tiny():
    return TINY


def union(*ivs):
    return DomainSet.union(*ivs)


def all_triples(M, plan, g):
    """Every sampled (r, t, delta) with its combination point, by brute force."""
    from xconvex._engine import triple_set

    ts = triple_set(M, plan)
    R = ts.points[ts.r_idx]
    T = ts.points[ts.t_idx]
    return ts, R, T, np.asarray(ts.deltas)


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
