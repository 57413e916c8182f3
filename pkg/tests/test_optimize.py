import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import SMALL
from xconvex.checker import Tolerances
from xconvex.geometry import DomainSet, SamplePlan
from xconvex.lang import GMap, ScalarFn
from xconvex.optimize import (
    ObjectiveVector,
    check_ball_condition,
    dominates,
    efficiency_scan,
    efficiency_theorem_harness,
    global_min_search,
    local_global_harness,
    local_minima,
    minimum_set_x_convex_harness,
    sampled_points,
    uniqueness_harness,
)

INF = math.inf
TOL = Tolerances()
IDENT = GMap.identity(1)
M_0_10 = DomainSet.union((0, 10))
M_UNIT = DomainSet.union((0, 1))
M_FLOOR = DomainSet.union((-INF, -3), (-2, -1))
GRID_HALF = SamplePlan(grid_per_axis=21, random_count=0, delta_grid=11)
GRID = SamplePlan(grid_per_axis=41, random_count=0, delta_grid=21)


def fn(text, **params):
    return ScalarFn.from_text(text, 1, params)


def g(text):
    return GMap.from_text([text])


IDENTITY_WHOLE = fn("r").with_domain(DomainSet.whole(1))


def flat(points):
    return sorted(float(p[0]) for p in points)


def test_global_min_search_examples():
    p, v = global_min_search(fn("r"), M_0_10, SMALL)
    assert (p.tolist(), v) == ([0.0], 0.0)
    plan = SamplePlan(grid_per_axis=10, random_count=30, breakpoints=(1.0,))
    p, v = global_min_search(fn("(r - 1)^2"), DomainSet.union((0, 3)), plan)
    assert (p.tolist(), v) == ([1.0], 0.0)
    p, v = global_min_search(fn("alpha + floor(r)", alpha=0.25), M_FLOOR, SMALL)
    assert (p.tolist(), v) == ([-1000.0], 0.25 - 1000)


def test_global_min_ties_go_to_smallest_point():
    p, v = global_min_search(fn("abs(r) - abs(r) + 2"), DomainSet.union((-1, 1)), SMALL)
    assert (p.tolist(), v) == ([-1.0], 2.0)


def test_local_minima_examples():
    assert flat(local_minima(fn("r"), M_0_10, GRID_HALF, 0.6)) == [0.0]
    assert flat(local_minima(fn("abs(r)"), DomainSet.union((-1, 1)), GRID, 0.3)) == [0.0]
    w = fn("min((r + 1)^2, (r - 1)^2)")
    assert flat(local_minima(w, DomainSet.union((-2, 2)), GRID, 0.3)) == [-1.0, 1.0]
    with pytest.raises(ValueError):
        local_minima(fn("r"), M_0_10, GRID, 0.0)


def brute_local_minima(vals, pts, nu, strict):
    out = []
    for i in range(len(pts)):
        others = [j for j in range(len(pts)) if j != i and abs(pts[j, 0] - pts[i, 0]) < nu]
        if all((vals[i] < vals[j]) if strict else (vals[i] <= vals[j]) for j in others):
            out.append(float(pts[i, 0]))
    return sorted(out)


@given(
    st.lists(st.floats(-2, 2), min_size=3, max_size=3),
    st.floats(0.05, 1.5),
    st.booleans(),
)
def test_local_minima_match_brute_force(c, nu, strict):
    phi = fn(f"{c[0]!r} * r^3 + {c[1]!r} * r^2 + {c[2]!r} * floor(4 * r)")
    M = DomainSet.union((-2, 2))
    plan = SamplePlan(grid_per_axis=31, random_count=15, delta_grid=3)
    pts = sampled_points(M, plan, phi)
    assert flat(local_minima(phi, M, plan, nu, strict)) == brute_local_minima(phi.values(pts), pts, nu, strict)


@given(st.lists(st.floats(-2, 2), min_size=2, max_size=2))
def test_wide_ball_gives_global_argmin(c):
    phi = fn(f"floor({c[0]!r} * r) + {c[1]!r} * r^2")
    M = DomainSet.union((-1, 0.5), (1, 2))
    pts = sampled_points(M, SMALL, phi)
    vals = phi.values(pts)
    expected = flat(pts[vals == vals.min()])
    assert flat(local_minima(phi, M, SMALL, 3.0 + 1e-9)) == expected


def brute_ball(M, g, plan):
    from xconvex._engine import triple_set

    ts = triple_set(M, plan)
    best = 0.0
    for i, j in zip(ts.r_idx, ts.t_idx):
        s, r = ts.points[i, 0], ts.points[j, 0]
        gr = float(g.apply(np.array([[r]]))[0, 0])
        for d in ts.deltas:
            best = max(best, abs(d * (s - r) + gr - r))
    return best


def test_ball_condition_examples():
    plan = SamplePlan(grid_per_axis=11, random_count=5, delta_grid=11)
    b = check_ball_condition(M_UNIT, IDENT, plan, 2.0)
    assert b.max_observed == 1.0 and b.holds_on_samples
    assert not check_ball_condition(M_UNIT, IDENT, plan, 0.5).holds_on_samples
    half = g("0.5")
    b = check_ball_condition(M_UNIT, half, plan, 2.0)
    assert b.holds_on_samples
    assert b.max_observed == pytest.approx(brute_ball(M_UNIT, half, plan), abs=1e-15)
    assert b.to_json() == {"nu": 2.0, "max_observed": b.max_observed, "holds_on_samples": True}
    with pytest.raises(ValueError):
        check_ball_condition(M_UNIT, IDENT, plan, -1.0)


def test_local_global_harness_examples():
    rep = local_global_harness(IDENTITY_WHOLE, g("r - 1"), M_0_10, SMALL, 20.0, "strictly_xconvex", TOL)
    assert rep.passed and rep.details["argmin"] == [0.0] and rep.details["argmin_count"] == 1
    rep = local_global_harness(fn("3"), IDENT, M_0_10, SMALL, 20.0, "xconvex", TOL)
    assert rep.passed and rep.details["argmin_count"] == rep.details["local_minima"]
    pw21 = fn("piecewise((r == 0, 2), 1)")
    M21 = DomainSet.union((0, 2), (5, INF))
    rep = local_global_harness(pw21, g("r + 5"), M21, SMALL, 1e4, "semistrict", TOL)
    assert rep.passed
    rep = local_global_harness(fn("(r - 1)^2"), IDENT, DomainSet.union((0, 3)), SamplePlan(grid_per_axis=31, random_count=20, delta_grid=21, breakpoints=(1.0,)), 4.0, "quasi_strict", TOL)
    assert rep.passed and rep.details["argmin"] == [1.0]


def test_local_global_harness_skips():
    rep = local_global_harness(fn("r"), IDENT, M_0_10, SMALL, 1.0, "xconvex", TOL)
    assert rep.skipped and "ball condition" in rep.skip_reasons[0]
    rep = local_global_harness(fn("-r^2"), IDENT, M_0_10, SMALL, 20.0, "xconvex", TOL)
    assert rep.skipped and "x_convex" in rep.skip_reasons[0]
    with pytest.raises(ValueError):
        local_global_harness(fn("r"), IDENT, M_0_10, SMALL, 20.0, "nope", TOL)


def test_minimum_set_harness():
    M = DomainSet.union((1, 2), (3, INF))
    rep = minimum_set_x_convex_harness(fn("c", c=1.5), g("r + 3"), M, SMALL, TOL, "t45_min")
    assert rep.passed
    assert rep.details["minimizers"] == len(sampled_points(M, SMALL))
    rep = minimum_set_x_convex_harness(IDENTITY_WHOLE, g("r - 1"), M_0_10, SMALL, TOL, "t45_min")
    assert len(rep.red_events) == 1
    ev = rep.red_events[0]
    assert ev.witness["combo"] == [-1.0] and ev.annotation
    rep = minimum_set_x_convex_harness(fn("alpha + floor(r)", alpha=1.0), g("r - 3"), M_FLOOR, SMALL, TOL, "t59")
    assert rep.passed
    rep = minimum_set_x_convex_harness(fn("-r^2"), IDENT, M_0_10, SMALL, TOL, "t45_min")
    assert rep.skipped


def test_uniqueness_harness():
    rep = uniqueness_harness(IDENTITY_WHOLE, g("r - 1"), M_0_10, SMALL, TOL, "t48")
    assert rep.passed and rep.details["argmin"] == [0.0]
    plan = SamplePlan(grid_per_axis=31, random_count=20, delta_grid=21, breakpoints=(1.0,))
    rep = uniqueness_harness(fn("(r - 1)^2"), IDENT, DomainSet.union((0, 3)), plan, TOL, "t58")
    assert rep.passed and rep.details["argmin"] == [1.0]
    rep = uniqueness_harness(fn("2"), IDENT, M_0_10, SMALL, TOL, "t48")
    assert rep.skipped and "strictly_quasi_x_convex" in rep.skip_reasons[0]


def test_dominates_examples():
    assert dominates((1, 2), (1, 3))
    assert not dominates((1, 2), (1, 2))
    assert dominates((0, 0), (1, 1), "A_prime")
    assert not dominates((0, 1), (1, 1), "A_prime")
    with pytest.raises(ValueError):
        dominates((1, 2), (1, 2, 3))
    with pytest.raises(ValueError):
        dominates((1,), (2,), "B")


vec = st.tuples(st.integers(-3, 3), st.integers(-3, 3), st.integers(-3, 3))


@given(vec, vec, vec, st.sampled_from(["A_minus_zero", "A_prime"]))
def test_dominates_properties(a, b, c, cone):
    assert not dominates(a, a, cone)
    if dominates(a, b, cone) and dominates(b, c, cone):
        assert dominates(a, c, cone)
    if dominates(a, b, "A_prime"):
        assert dominates(a, b, "A_minus_zero")


def test_efficiency_scan_examples():
    lin = ObjectiveVector((fn("r"), fn("1 - r")), IDENT)
    scan = efficiency_scan(lin, M_UNIT, SMALL, 0.1)
    assert all(v.global_efficient for v in scan)
    sq = ObjectiveVector((fn("r^2"), fn("(r - 1)^2")), IDENT)
    M = DomainSet.union((-1, 2))
    plan = SamplePlan(grid_per_axis=41, random_count=60, delta_grid=51, breakpoints=(0.0, 0.5, 1.0))
    scan = efficiency_scan(sq, M, plan, 0.1)
    assert {v.point[0] for v in scan if v.global_efficient} == {v.point[0] for v in scan if 0 <= v.point[0] <= 1}
    one = ObjectiveVector((fn("r"),), IDENT)
    scan = efficiency_scan(one, M_UNIT, SMALL, 0.1)
    assert [v.point for v in scan if v.global_efficient] == [(0.0,)]
    bad = [v for v in scan if not v.global_efficient][0]
    assert dict(bad.dominators)["global_efficient"] == (0.0,)


def test_efficiency_record_format():
    sq = ObjectiveVector((fn("r^2"), fn("(r - 1)^2")), IDENT)
    plan = SamplePlan(grid_per_axis=3, random_count=0)
    rec = [v.to_json() for v in efficiency_scan(sq, M_UNIT, plan, 0.1)][1]
    assert rec == {
        "r": [0.5],
        "phi": [0.25, 0.25],
        "global_efficient": True,
        "local_efficient": True,
        "global_weakly": True,
        "local_weakly": True,
    }


def brute_scan(V, pts, nu):
    out = []
    for i in range(len(pts)):
        near = [j for j in range(len(pts)) if j != i and np.linalg.norm(pts[j] - pts[i]) < nu]
        allj = range(len(pts))
        out.append(
            (
                not any(dominates(V[j], V[i]) for j in allj),
                not any(dominates(V[j], V[i]) for j in near),
                not any(dominates(V[j], V[i], "A_prime") for j in allj),
                not any(dominates(V[j], V[i], "A_prime") for j in near),
            )
        )
    return out


objectives = st.lists(st.tuples(st.integers(-2, 2), st.integers(-2, 2)), min_size=1, max_size=3).map(
    lambda cs: tuple(fn(f"floor({a} * r) + {b} * r^2") for a, b in cs)
)


@given(objectives, st.floats(0.05, 2.0))
def test_efficiency_scan_matches_brute_force_and_lattice(fns, nu):
    Phi = ObjectiveVector(fns, IDENT)
    M = DomainSet.union((-1, 1))
    plan = SamplePlan(grid_per_axis=15, random_count=10, delta_grid=3)
    scan = efficiency_scan(Phi, M, plan, nu)
    pts = sampled_points(M, plan, *fns)
    ref = brute_scan(Phi.values(pts), pts, nu)
    for v, r in zip(scan, ref):
        flags = (v.global_efficient, v.local_efficient, v.global_weakly, v.local_weakly)
        assert flags == r
        assert not v.global_efficient or v.local_efficient
        assert not v.global_weakly or v.local_weakly
        assert not v.global_efficient or v.global_weakly
        assert not v.local_efficient or v.local_weakly


def test_efficiency_harness_examples():
    lin = ObjectiveVector((fn("r"), fn("1 - r")), IDENT)
    assert efficiency_theorem_harness(lin, M_UNIT, SMALL, 0.1, "t53", None, TOL).passed
    rep = efficiency_theorem_harness(lin, M_UNIT, SMALL, 0.1, "t57", (1.0, 0.0), TOL)
    assert rep.passed and rep.details["scalar_local_minima"] == [[0.0]]
    sq = ObjectiveVector((fn("r^2"), fn("(r - 1)^2")), IDENT)
    plan = SamplePlan(grid_per_axis=41, random_count=60, delta_grid=51, breakpoints=(0.0, 0.5, 1.0))
    M = DomainSet.union((-1, 2))
    rep = efficiency_theorem_harness(sq, M, plan, 0.1, "t54", (0.5, 0.5), TOL)
    assert rep.passed and rep.details["scalar_local_minima"] == [[0.5]]
    assert efficiency_theorem_harness(sq, M, plan, 0.1, "t55", None, TOL).passed
    assert efficiency_theorem_harness(lin, M_UNIT, SMALL, 0.1, "t56", None, TOL).passed


def test_efficiency_harness_skips_and_errors():
    lin = ObjectiveVector((fn("r"), fn("1 - r")), IDENT)
    consts = ObjectiveVector((fn("1"), fn("2")), IDENT)
    rep = efficiency_theorem_harness(consts, M_UNIT, SMALL, 0.1, "t55", None, TOL)
    assert rep.skipped and "strictly" in rep.skip_reasons[-1]
    bumpy = ObjectiveVector((fn("abs(abs(4 * r - 4) - 2)"), fn("r")), IDENT)
    rep = efficiency_theorem_harness(bumpy, DomainSet.union((0, 2)), SMALL, 0.1, "t53", None, TOL)
    assert rep.skipped and rep.skip_reasons[0].startswith("objective 1")
    with pytest.raises(ValueError):
        efficiency_theorem_harness(lin, M_UNIT, SMALL, 0.1, "t54", None, TOL)
    with pytest.raises(ValueError):
        efficiency_theorem_harness(lin, M_UNIT, SMALL, 0.1, "t57", (0.0, 0.0), TOL)
    with pytest.raises(ValueError):
        efficiency_theorem_harness(lin, M_UNIT, SMALL, 0.1, "t99", None, TOL)


@given(st.floats(0.05, 1), st.floats(0.05, 1))
def test_scalarization_minimizers_are_efficient(m1, m2):
    sq = ObjectiveVector((fn("r^2"), fn("abs(r - 1)")), IDENT)
    M = DomainSet.union((-1, 2))
    plan = SamplePlan(grid_per_axis=21, random_count=10, delta_grid=3)
    pts = sampled_points(M, plan, *sq.components)
    vals = sq.values(pts) @ np.array([m1, m2])
    scan = efficiency_scan(sq, M, plan, 0.1)
    for k in np.flatnonzero(vals == vals.min()):
        assert scan[k].global_efficient
