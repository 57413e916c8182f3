"""Epigraphs and level sets, and their X-convexity checks."""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from . import _engine as eng
from .checker import (
    DEFAULT_PLAN,
    DEFAULT_TOL,
    ClassVerdict,
    Status,
    Tolerances,
    Witness,
    _escape_witness,
    _set_scan,
    check_class,
)
from .geometry import DomainSet, SamplePlan
from .harness import SAMPLED_NOTE, HarnessReport, RedEvent, skipped
from .lang import GMap, ScalarFn, Var

__all__ = [
    "lifted_map",
    "LevelSet",
    "epigraph_member",
    "hypograph_member",
    "check_epigraph_x_convex",
    "check_hypograph_x_convex",
    "check_levelset_x_convex",
    "check_levelsets",
    "default_eta_grid",
    "quasi_iff_levelsets_harness",
    "levelsets_of_x_convex_harness",
    "epigraph_harness",
]


def lifted_map(g: GMap) -> GMap:
    """``(t, mu) -> (g(t), mu)`` on ``(n+1)``-space."""
    return GMap(tuple(g.components) + (Var(g.dim),), g.params)


@dataclass(frozen=True)
class LevelSet:
    """``{x in M : phi(x) <= eta}`` (lower) or ``{x in M : phi(x) >= eta}`` (upper)."""

    phi: ScalarFn
    M: DomainSet
    eta: float
    direction: str = "lower"

    def __post_init__(self):
        if self.direction not in ("lower", "upper"):
            raise ValueError("direction must be 'lower' or 'upper'")

    def contains_many(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        inside = self.M.contains_many(X)
        out = np.zeros(len(X), dtype=bool)
        if inside.any():
            v = self.phi.values(X[inside])
            out[inside] = v <= self.eta if self.direction == "lower" else v >= self.eta
        return out

    def contains(self, x) -> bool:
        return bool(self.contains_many(np.atleast_1d(np.asarray(x, dtype=float))[None, :])[0])


def _split(point, dim: int):
    p = np.atleast_1d(np.asarray(point, dtype=float))
    if len(p) != dim + 1:
        raise ValueError(f"expected a point (x, eta) of dimension {dim + 1}")
    return p[:dim], float(p[dim])


def epigraph_member(phi: ScalarFn, M: DomainSet, point, tol: Tolerances = DEFAULT_TOL) -> bool:
    """``(x, eta)`` lies in the epigraph: ``x in M`` and ``phi(x) <= eta``."""
    x, eta = _split(point, M.dim)
    return M.contains(x) and phi(x) <= eta + tol.eps_ineq


def hypograph_member(phi: ScalarFn, M: DomainSet, point, tol: Tolerances = DEFAULT_TOL) -> bool:
    x, eta = _split(point, M.dim)
    return M.contains(x) and phi(x) >= eta - tol.eps_ineq


# --------------------------------------------------------------------------
# epigraph

_LEVELS = ((0, 0), (0, 1), (1, 0), (1, 1))


def _vertical_height(fv: np.ndarray) -> float:
    spread = float(fv.max() - fv.min())
    return 2.0 * spread if spread > 0 else 1.0


def _escape_scan(phi, g, M, plan, ts, gt, support):
    """Escape candidate for combos against ``support`` (``None`` if none)."""
    if support == M:
        return _set_scan(M, g, plan)
    if support.is_whole_space:
        return None

    def chunk(a, b):
        C = eng.combos(ts, gt, a, b)
        dist = eng.escape_distances(support, C, eng.row_bounds(ts, gt, a, b))
        return eng.row_candidate(dist.max(axis=1), None, a)

    best = eng.reduce_candidates(eng.map_chunks(chunk, ts.chunks()))
    return best if best is not None and best[0] > 0.0 else None


def _epi_chunk(phi, ts, gt, fv, H, a, b):
    C = eng.combos(ts, gt, a, b)
    p, D, n = C.shape
    fr, ft = fv[ts.r_idx[a:b]], fv[ts.t_idx[a:b]]
    lhs = phi.values(C.reshape(-1, n)).reshape(p, D)
    d = ts.deltas[None, :]
    best = None
    for lr, lt in _LEVELS:
        eta = (fr + lr * H)[:, None]
        mu = (ft + lt * H)[:, None]
        gap = lhs - (d * (eta - mu) + mu)
        cand = eng.row_candidate(gap.max(axis=1), None, a)
        if cand is not None:
            best = eng.better(best, (cand[0], cand[1] + (lr, lt)))
    return best


@functools.lru_cache(maxsize=128)
def check_epigraph_x_convex(
    phi: ScalarFn,
    g: GMap,
    M: DomainSet,
    plan: SamplePlan = DEFAULT_PLAN,
    tol: Tolerances = DEFAULT_TOL,
) -> ClassVerdict:
    """X-convexity of ``epi(phi)`` under the lifted map ``(t, mu) -> (g(t), mu)``.

    Heights are sampled at ``phi(x)`` and ``phi(x) + H`` with ``H`` twice the
    sampled range of ``phi`` (1 for constants).
    """
    plan = eng.effective_plan(plan, M, phi)
    ts = eng.triple_set(M, plan)
    gt = g.apply(ts.points)
    fv = phi.values(ts.points)
    H = _vertical_height(fv)
    total = ts.n_pairs * len(ts.deltas) * len(_LEVELS)
    support = phi.domain if phi.domain is not None else M
    esc = _escape_scan(phi, g, M, plan, ts, gt, support)
    if esc is not None:
        w = _escape_witness(ts, gt, support, esc)
        return ClassVerdict("epigraph", Status.DOMAIN_ESCAPE, w, total, w.gap)
    best = eng.reduce_candidates(
        eng.map_chunks(lambda a, b: _epi_chunk(phi, ts, gt, fv, H, a, b), ts.chunks(len(_LEVELS)))
    )
    if best is None or best[0] <= tol.eps_ineq:
        return ClassVerdict("epigraph", Status.NO_COUNTEREXAMPLE, None, total, None if best is None else best[0])
    k, lr, lt = best[1]
    i, j = ts.r_idx[k], ts.t_idx[k]
    r, t = ts.points[i], ts.points[j]
    eta, mu = float(fv[i] + lr * H), float(fv[j] + lt * H)
    C = ts.deltas[:, None] * (r - t)[None, :] + gt[j][None, :]
    lhs = phi.values(C)
    vert = ts.deltas * (eta - mu) + mu
    gap = lhs - vert
    col = int(np.flatnonzero(gap == best[0])[0])
    w = Witness(
        tuple(r.tolist()) + (eta,),
        tuple(t.tolist()) + (mu,),
        float(ts.deltas[col]),
        tuple(C[col].tolist()) + (float(vert[col]),),
        float(lhs[col]),
        float(vert[col]),
        float(gap[col]),
    )
    return ClassVerdict("epigraph", Status.FALSIFIED, w, total, best[0])


def check_hypograph_x_convex(phi, g, M, plan=DEFAULT_PLAN, tol=DEFAULT_TOL) -> ClassVerdict:
    """Hypograph of ``phi`` as the reflected epigraph of ``-phi``."""
    v = check_epigraph_x_convex(phi.negated(), g, M, plan, tol)
    return ClassVerdict("hypograph", v.status, v.witness, v.triples_checked, v.max_gap, notes=("heights negated",))


# --------------------------------------------------------------------------
# level sets


@dataclass(frozen=True)
class _LevelRows:
    """Per pair: larger endpoint value and largest combo value over deltas."""

    m: np.ndarray
    top: np.ndarray
    escape: np.ndarray


def _level_chunk(phi, ts, gt, fv, support, a, b):
    C = eng.combos(ts, gt, a, b)
    p, D, n = C.shape
    if support is None:
        esc = np.zeros(p)
        lhs = phi.values(C.reshape(-1, n)).reshape(p, D)
    else:
        dist = eng.escape_distances(support, C, eng.row_bounds(ts, gt, a, b))
        esc = dist.max(axis=1)
        flat = C.reshape(-1, n)
        ok = dist.reshape(-1) == 0.0
        lhs = np.full(p * D, -np.inf)
        if ok.any():
            lhs[ok] = phi.values(flat[ok])
        lhs = lhs.reshape(p, D)
    return lhs.max(axis=1), esc


@functools.lru_cache(maxsize=64)
def _level_rows(phi: ScalarFn, g: GMap, M: DomainSet, plan: SamplePlan, support: DomainSet | None) -> _LevelRows:
    ts = eng.triple_set(M, plan)
    gt = g.apply(ts.points)
    fv = phi.values(ts.points)
    if support is not None and support.is_whole_space:
        support = None
    parts = eng.map_chunks(lambda a, b: _level_chunk(phi, ts, gt, fv, support, a, b), ts.chunks())
    top = np.concatenate([p[0] for p in parts]) if parts else np.empty(0)
    esc = np.concatenate([p[1] for p in parts]) if parts else np.empty(0)
    m = np.maximum(fv[ts.r_idx], fv[ts.t_idx])
    return _LevelRows(m, top, esc)


def _running_best(order, values, thresholds, m_sorted):
    """For each threshold, best (value, row) among rows with ``m <= threshold``."""
    out = []
    best = None
    start = 0
    for th in thresholds:
        stop = int(np.searchsorted(m_sorted, th, side="right"))
        if stop > start:
            block = order[start:stop]
            vals = values[block]
            top = vals.max()
            if top > -np.inf:
                row = int(block[vals == top].min())
                best = eng.better(best, (float(top), (row,)))
            start = stop
        out.append(best)
    return out


def check_levelsets(
    phi: ScalarFn,
    g: GMap,
    M: DomainSet,
    etas,
    plan: SamplePlan = DEFAULT_PLAN,
    tol: Tolerances = DEFAULT_TOL,
    direction: str = "lower",
    support: DomainSet | None = None,
) -> list[ClassVerdict]:
    """X-convexity of level sets for every ``eta`` in ``etas`` (one verdict each).

    Sampled members are the sampled points of the level set; a combination of
    two members must stay in the support (``phi``'s domain, else ``M``) and
    satisfy the value bound within ``eps_ineq``.
    """
    if direction not in ("lower", "upper"):
        raise ValueError("direction must be 'lower' or 'upper'")
    etas = [float(e) for e in etas]
    if direction == "upper":
        vs = check_levelsets(phi.negated(), g, M, [-e for e in etas], plan, tol, "lower", support)
        return [
            ClassVerdict("upper_levelset", v.status, v.witness, v.triples_checked, v.max_gap, eta=e, notes=("values negated",))
            for v, e in zip(vs, etas)
        ]
    plan = eng.effective_plan(plan, M, phi)
    if support is None:
        support = phi.domain if phi.domain is not None else M
    ts = eng.triple_set(M, plan)
    rows = _level_rows(phi, g, M, plan, support)
    D = len(ts.deltas)
    order = np.argsort(rows.m, kind="stable")
    m_sorted = rows.m[order]
    uniq = sorted(set(etas))
    esc_best = dict(zip(uniq, _running_best(order, rows.escape, uniq, m_sorted)))
    top_best = dict(zip(uniq, _running_best(order, rows.top, uniq, m_sorted)))
    gt = None
    out = []
    for eta in etas:
        count = int(np.searchsorted(m_sorted, eta, side="right")) * D
        esc = esc_best[eta]
        if esc is not None and esc[0] > 0.0:
            if gt is None:
                gt = g.apply(ts.points)
            w = _escape_witness(ts, gt, support, esc)
            out.append(ClassVerdict("levelset", Status.DOMAIN_ESCAPE, w, count, w.gap, eta=eta))
            continue
        top = top_best[eta]
        if top is None:
            out.append(ClassVerdict("levelset", Status.NO_COUNTEREXAMPLE, None, count, None, eta=eta))
            continue
        gap = top[0] - eta
        if gap <= tol.eps_ineq:
            out.append(ClassVerdict("levelset", Status.NO_COUNTEREXAMPLE, None, count, gap, eta=eta))
            continue
        out.append(ClassVerdict("levelset", Status.FALSIFIED, _level_witness(phi, g, ts, top, eta), count, gap, eta=eta))
    return out


def _level_witness(phi, g, ts, cand, eta) -> Witness:
    k = cand[1][0]
    i, j = ts.r_idx[k], ts.t_idx[k]
    r, t = ts.points[i], ts.points[j]
    C = ts.deltas[:, None] * (r - t)[None, :] + g.apply(t[None, :])
    lhs = phi.values(C)
    col = int(np.flatnonzero(lhs == cand[0])[0])
    return Witness(
        tuple(r.tolist()),
        tuple(t.tolist()),
        float(ts.deltas[col]),
        tuple(C[col].tolist()),
        float(lhs[col]),
        eta,
        float(lhs[col]) - eta,
    )


def check_levelset_x_convex(
    phi: ScalarFn,
    g: GMap,
    M: DomainSet,
    eta: float,
    plan: SamplePlan = DEFAULT_PLAN,
    tol: Tolerances = DEFAULT_TOL,
    direction: str = "lower",
    support: DomainSet | None = None,
) -> ClassVerdict:
    """X-convexity of one level set; an empty sampled level set passes vacuously."""
    return check_levelsets(phi, g, M, [eta], plan, tol, direction, support)[0]


def default_eta_grid(phi: ScalarFn, M: DomainSet, plan: SamplePlan = DEFAULT_PLAN) -> list[float]:
    """All distinct values of ``phi`` on the sampled points."""
    plan = eng.effective_plan(plan, M, phi)
    pts = eng.triple_set(M, plan).points
    return [float(v) for v in np.unique(phi.values(pts))]


def quasi_iff_levelsets_harness(
    phi: ScalarFn,
    g: GMap,
    M: DomainSet,
    plan: SamplePlan = DEFAULT_PLAN,
    tol: Tolerances = DEFAULT_TOL,
    eta_grid=None,
) -> HarnessReport:
    """Quasi-X-convexity against X-convexity of every lower level set on a finite grid."""
    quasi = check_class(phi, g, M, plan, tol, "quasi_x_convex")
    etas = list(eta_grid) if eta_grid is not None else default_eta_grid(phi, M, plan)
    if not etas:
        raise ValueError("eta_grid must not be empty")
    if quasi.status != Status.NO_COUNTEREXAMPLE and quasi.witness is not None and quasi.witness.kind != "domain-escape":
        etas.append(quasi.witness.rhs)
    etas = sorted(set(etas))
    levels = check_levelsets(phi, g, M, etas, plan, tol)
    failing = [v for v in levels if v.status != Status.NO_COUNTEREXAMPLE]
    red = []
    if quasi.status == Status.NO_COUNTEREXAMPLE and failing:
        v = failing[0]
        red.append(RedEvent(f"quasi holds on samples but the level set at eta={v.eta!r} fails", v.witness.to_json()))
    if quasi.status != Status.NO_COUNTEREXAMPLE and not failing:
        red.append(RedEvent("quasi fails on samples but every level set on the grid passes", quasi.witness.to_json()))
    shown = failing[:5]
    return HarnessReport(
        "t46",
        hypotheses=(),
        conclusions=(quasi, *shown),
        red_events=tuple(red),
        notes=(SAMPLED_NOTE, "level sets checked on a finite eta grid only"),
        details={"eta_count": len(etas), "failing_eta_count": len(failing)},
    )


def levelsets_of_x_convex_harness(
    phi: ScalarFn,
    g: GMap,
    M: DomainSet,
    plan: SamplePlan = DEFAULT_PLAN,
    tol: Tolerances = DEFAULT_TOL,
    eta_grid=None,
) -> HarnessReport:
    """An X-convex function has X-convex lower level sets (checked on an eta grid)."""
    hyp = check_class(phi, g, M, plan, tol, "x_convex")
    if hyp.status != Status.NO_COUNTEREXAMPLE:
        return skipped("t44", [f"x_convex: {hyp.status.value}"], (hyp,))
    etas = list(eta_grid) if eta_grid is not None else default_eta_grid(phi, M, plan)
    levels = check_levelsets(phi, g, M, etas, plan, tol)
    failing = [v for v in levels if v.status != Status.NO_COUNTEREXAMPLE]
    red = tuple(
        RedEvent(f"level set at eta={v.eta!r} is not X-convex ({v.status.value})", v.witness.to_json())
        for v in failing[:1]
    )
    return HarnessReport(
        "t44",
        hypotheses=(hyp,),
        conclusions=tuple(failing[:5]),
        red_events=red,
        notes=(SAMPLED_NOTE, "level sets checked on a finite eta grid only"),
        details={"eta_count": len(etas), "failing_eta_count": len(failing)},
    )


def epigraph_harness(
    phi: ScalarFn,
    g: GMap,
    M: DomainSet,
    plan: SamplePlan = DEFAULT_PLAN,
    tol: Tolerances = DEFAULT_TOL,
) -> HarnessReport:
    """An X-convex function has an X-convex epigraph under the lifted map."""
    hyp = check_class(phi, g, M, plan, tol, "x_convex")
    if hyp.status != Status.NO_COUNTEREXAMPLE:
        return skipped("t41", [f"x_convex: {hyp.status.value}"], (hyp,))
    epi = check_epigraph_x_convex(phi, g, M, plan, tol)
    red = ()
    if epi.status != Status.NO_COUNTEREXAMPLE:
        red = (RedEvent(f"epigraph is not X-convex under the lifted map ({epi.status.value})", epi.witness.to_json()),)
    return HarnessReport("t41", hypotheses=(hyp,), conclusions=(epi,), red_events=red)
