import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from xconvex.checker import Status, Tolerances, check_class
from xconvex.geometry import DomainSet, SamplePlan
from xconvex.lang import GMap, ScalarFn
from xconvex.sets import (
    LevelSet,
    check_epigraph_x_convex,
    check_hypograph_x_convex,
    check_levelset_x_convex,
    check_levelsets,
    default_eta_grid,
    epigraph_harness,
    epigraph_member,
    hypograph_member,
    levelsets_of_x_convex_harness,
    lifted_map,
    quasi_iff_levelsets_harness,
)

INF = math.inf
NCF, FALSE, ESC = Status.NO_COUNTEREXAMPLE, Status.FALSIFIED, Status.DOMAIN_ESCAPE
SMALL = SamplePlan(grid_per_axis=41, random_count=60, delta_grid=51)
TINY = SamplePlan(grid_per_axis=9, random_count=6, delta_grid=9)
IDENT = GMap.identity(1)
UNIT = DomainSet.union((0, 1))
M_123 = DomainSet.union((1, 2), (3, INF))
M_FLOOR = DomainSet.union((-INF, -3), (-2, -1))
M_PW32 = DomainSet.union((-1, -0.5), (0, INF))
M_0_10 = DomainSet.union((0, 10))


def fn(text, **params):
    return ScalarFn.from_text(text, 1, params)


def g(text):
    return GMap.from_text([text])


FLOOR = fn("alpha + floor(r)", alpha=1.0)
PW32 = fn("piecewise((r == 0, 3), 2)")
IDENTITY_WHOLE = fn("r").with_domain(DomainSet.whole(1))


def test_lifted_map_passes_height_through():
    lg = lifted_map(g("r - 1"))
    assert lg([2.0, 7.5]).tolist() == [1.0, 7.5]


def test_epigraph_membership():
    phi = fn("r")
    assert epigraph_member(phi, UNIT, (0.5, 0.7))
    assert not epigraph_member(phi, UNIT, (0.5, 0.4))
    const = fn("c", c=2.0)
    assert epigraph_member(const, M_123, (1.5, 2.0))
    assert not epigraph_member(const, M_123, (2.5, 9.0))
    assert hypograph_member(phi, UNIT, (0.5, 0.4))


def test_level_set_membership():
    L = LevelSet(fn("r^2"), DomainSet.union((-2, 2)), 1.0)
    assert L.contains([0.5]) and L.contains([-1.0]) and not L.contains([1.5])
    U = LevelSet(fn("r^2"), DomainSet.union((-2, 2)), 1.0, "upper")
    assert U.contains([1.5]) and not U.contains([0.5])
    with pytest.raises(ValueError):
        LevelSet(fn("r"), UNIT, 0.0, "sideways")


def test_epigraph_examples():
    assert check_epigraph_x_convex(fn("c", c=2.0), g("r + 3"), M_123, SMALL).status == NCF
    assert check_epigraph_x_convex(IDENTITY_WHOLE, g("r - 1"), M_0_10, SMALL).status == NCF
    v = check_epigraph_x_convex(FLOOR, g("r - 1/50"), DomainSet.union((-INF, -1 / 50), (-1 / 100, 0)), SMALL)
    assert v.status == FALSE
    w = v.witness
    assert len(w.r) == 2 and w.lhs > w.rhs


def test_epigraph_with_identity_is_classical():
    # epi of a convex function is convex; epi of a non-convex one is not
    assert check_epigraph_x_convex(fn("r^2"), IDENT, DomainSet.union((-1, 2)), SMALL).status == NCF
    assert check_epigraph_x_convex(fn("-r^2"), IDENT, DomainSet.union((-1, 2)), SMALL).status == FALSE
    assert check_hypograph_x_convex(fn("-r^2"), IDENT, DomainSet.union((-1, 2)), SMALL).status == NCF


def _epigraph_oracle(phi, gmap, M, plan, tol):
    pts, pairs, deltas = oracles.samples(phi, M, plan)
    fv = [phi(p) for p in pts]
    spread = max(fv) - min(fv)
    H = 2 * spread if spread > 0 else 1.0
    worst = -INF
    for i, j in pairs:
        r, t = pts[i].tolist(), pts[j].tolist()
        for lr in (0, 1):
            for lt in (0, 1):
                eta, mu = fv[i] + lr * H, fv[j] + lt * H
                for d in deltas:
                    c = oracles.combo(r, t, d, gmap)
                    worst = max(worst, phi(c) - (d * (eta - mu) + mu))
    return "falsified" if worst > tol.eps_ineq else "no_counterexample_found"


@pytest.mark.parametrize(
    "phi, M",
    [
        (fn("r^2"), DomainSet.union((-1, 2))),
        (fn("-r^2"), DomainSet.union((-1, 2))),
        (fn("abs(r) + floor(r)"), DomainSet.union((-2, 2))),
    ],
)
def test_epigraph_matches_brute_force(phi, M):
    tol = Tolerances()
    assert check_epigraph_x_convex(phi, IDENT, M, TINY, tol).status.value == _epigraph_oracle(phi, IDENT, M, TINY, tol)


def test_levelset_examples():
    assert check_levelset_x_convex(FLOOR, g("r - 3"), M_FLOOR, -3.0, SMALL).status == NCF
    assert check_levelset_x_convex(fn("r"), IDENT, UNIT, 0.5, SMALL).status == NCF
    v = check_levelset_x_convex(PW32, g("r + 1"), M_PW32, 2.0, SMALL)
    assert v.status == FALSE and v.witness.lhs == 3.0 and v.eta == 2.0


def test_empty_level_set_passes_vacuously():
    v = check_levelset_x_convex(fn("r"), IDENT, UNIT, -5.0, SMALL)
    assert v.status == NCF and v.triples_checked == 0


def test_upper_level_sets():
    vs = check_levelsets(fn("-r^2"), IDENT, DomainSet.union((-1, 1)), [-0.5, 0.0], SMALL, direction="upper")
    assert [v.status for v in vs] == [NCF, NCF]
    vs = check_levelsets(fn("r^2"), IDENT, DomainSet.union((-1, 1)), [0.25], SMALL, direction="upper")
    assert vs[0].status == FALSE


def _levelset_oracle(phi, gmap, M, plan, eta, tol):
    pts, pairs, deltas = oracles.samples(phi, M, plan)
    support = phi.domain if phi.domain is not None else M
    fv = [phi(p) for p in pts]
    for i, j in pairs:
        if fv[i] > eta or fv[j] > eta:
            continue
        r, t = pts[i].tolist(), pts[j].tolist()
        gt = gmap(np.array(t)).tolist()
        for d in deltas:
            c = oracles.combo(r, t, d, gmap)
            if oracles.escape_distance(support, r, t, c, gt) > 0:
                return "domain_escape"
            if phi(c) - eta > tol.eps_ineq:
                return "falsified"
    return "no_counterexample_found"


bodies = st.sampled_from(["r^2", "-r^2", "r^3 - r", "floor(2 * r)", "abs(r - 0.5)", "piecewise((r < 0, 1), r)"])


@given(bodies, st.floats(-2, 2), st.floats(0, 0.5))
def test_levelsets_match_brute_force(body, eta, shift):
    M = DomainSet.union((-1, 1))
    gmap = g(f"r + {shift!r}") if shift else IDENT
    phi = fn(body).with_domain(DomainSet.whole(1)) if shift else fn(body)
    tol = Tolerances()
    got = check_levelset_x_convex(phi, gmap, M, eta, TINY, tol).status.value
    assert got == _levelset_oracle(phi, gmap, M, TINY, eta, tol)


@given(bodies, st.floats(-2, 2), st.floats(0, 1))
def test_level_sets_are_nested(body, eta, step):
    phi = fn(body)
    M = DomainSet.union((-1, 1))
    pts = oracles.samples(phi, M, TINY)[0]
    lo = LevelSet(phi, M, eta).contains_many(pts)
    hi = LevelSet(phi, M, eta + step).contains_many(pts)
    assert np.all(hi[lo])


def test_default_eta_grid_is_sampled_values():
    etas = default_eta_grid(fn("floor(r)"), DomainSet.union((0, 3)), SMALL)
    assert etas == [0.0, 1.0, 2.0, 3.0]


def test_quasi_iff_levelsets_harness():
    rep = quasi_iff_levelsets_harness(FLOOR, g("r - 3"), M_FLOOR, SMALL)
    assert rep.passed and rep.conclusions[0].status == NCF
    rep = quasi_iff_levelsets_harness(PW32, g("r + 1"), M_PW32, SMALL)
    assert rep.passed
    assert rep.conclusions[0].status == FALSE
    assert any(v.eta == 2.0 and v.status == FALSE for v in rep.conclusions[1:])
    rep = quasi_iff_levelsets_harness(fn("c", c=1.0), IDENT, UNIT, SMALL, eta_grid=[0.0, 1.0, 2.0])
    assert rep.passed and rep.details["failing_eta_count"] == 0


def test_levelsets_and_epigraph_harnesses():
    rep = levelsets_of_x_convex_harness(IDENTITY_WHOLE, g("r - 1"), M_0_10, SMALL)
    assert rep.passed and "hypotheses verified on samples only" in rep.notes
    rep = levelsets_of_x_convex_harness(PW32, g("r + 1"), M_PW32, SMALL)
    assert rep.skipped and rep.skip_reasons
    rep = epigraph_harness(fn("c", c=2.0), g("r + 3"), M_123, SMALL)
    assert rep.passed
    hyp = check_class(FLOOR, g("r - 3"), M_FLOOR, SMALL, Tolerances(), "x_convex")
    assert epigraph_harness(FLOOR, g("r - 3"), M_FLOOR, SMALL).skipped == (hyp.status != NCF)
