"""Sampled minimization, local-versus-global harnesses and Pareto efficiency."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _engine as eng
from .algebra import conic
from .checker import DEFAULT_PLAN, DEFAULT_TOL, Status, Tolerances, check_class
from .geometry import DomainSet, SamplePlan
from .harness import SAMPLED_NOTE, HarnessReport, RedEvent, skipped
from .lang import GMap, ScalarFn

__all__ = [
    "BallCondition",
    "ObjectiveVector",
    "EfficiencyVerdict",
    "sampled_points",
    "global_min_search",
    "local_minima",
    "check_ball_condition",
    "local_global_harness",
    "minimum_set_x_convex_harness",
    "uniqueness_harness",
    "dominates",
    "efficiency_scan",
    "efficiency_theorem_harness",
    "LOCAL_GLOBAL_MODES",
    "EFFICIENCY_THEOREMS",
]

SCALE_NOTE = "flags computed at sampled scale"
ROW_CHUNK = 256


def sampled_points(M: DomainSet, plan: SamplePlan, *fns: ScalarFn) -> np.ndarray:
    """The sampled points the checks use for ``fns`` on ``M``."""
    return eng.triple_set(M, eng.effective_plan(plan, M, *fns)).points


def global_min_search(phi: ScalarFn, M: DomainSet, plan: SamplePlan = DEFAULT_PLAN) -> tuple[np.ndarray, float]:
    """Smallest sampled value; ties go to the lexicographically smallest point."""
    pts = sampled_points(M, plan, phi)
    vals = phi.values(pts)
    k = int(np.argmin(vals))
    return pts[k].copy(), float(vals[k])


def _neighbour_chunks(pts: np.ndarray, nu: float):
    """Yield ``(start, mask)`` where ``mask[i, j]`` says ``0 < |p_i - p_j| < nu``."""
    n = len(pts)
    for a in range(0, n, ROW_CHUNK):
        b = min(a + ROW_CHUNK, n)
        diff = pts[a:b, None, :] - pts[None, :, :]
        dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        mask = dist < nu
        mask[np.arange(b - a), np.arange(a, b)] = False
        yield a, mask


def _local_min_mask(vals: np.ndarray, pts: np.ndarray, nu: float, strict: bool) -> np.ndarray:
    out = np.zeros(len(pts), dtype=bool)
    for a, mask in _neighbour_chunks(pts, nu):
        nb = np.where(mask, vals[None, :], np.inf).min(axis=1)
        mine = vals[a : a + len(mask)]
        out[a : a + len(mask)] = mine < nb if strict else mine <= nb
    return out


def local_minima(
    phi: ScalarFn, M: DomainSet, plan: SamplePlan = DEFAULT_PLAN, nu: float = 0.1, strict: bool = False
) -> np.ndarray:
    """Sampled points no worse (``strict``: strictly better) than every sampled point within ``nu``.

    The ball is Euclidean and open.  Points come back in sample order.
    """
    if not nu > 0:
        raise ValueError("nu must be positive")
    pts = sampled_points(M, plan, phi)
    vals = phi.values(pts)
    return pts[_local_min_mask(vals, pts, nu, strict)].copy()


@dataclass(frozen=True)
class BallCondition:
    nu: float
    max_observed: float

    @property
    def holds_on_samples(self) -> bool:
        return self.max_observed < self.nu

    def to_json(self) -> dict:
        return {"nu": self.nu, "max_observed": self.max_observed, "holds_on_samples": self.holds_on_samples}


def check_ball_condition(M: DomainSet, g: GMap, plan: SamplePlan = DEFAULT_PLAN, nu: float = 1.0) -> BallCondition:
    """Largest ``|delta*(s - r) + g(r) - r|`` over sampled pairs ``(s, r)`` and the delta grid."""
    if not nu > 0:
        raise ValueError("nu must be positive")
    ts = eng.triple_set(M, plan)
    gt = g.apply(ts.points)

    def chunk(a, b):
        C = eng.combos(ts, gt, a, b) - ts.points[ts.t_idx[a:b]][:, None, :]
        return float(np.sqrt(np.einsum("ijk,ijk->ij", C, C)).max())

    return BallCondition(float(nu), max(eng.map_chunks(chunk, ts.chunks())))


LOCAL_GLOBAL_MODES = {
    "xconvex": ("t45", "x_convex"),
    "strictly_xconvex": ("t45", "strictly_x_convex"),
    "quasi_strict": ("t47", "quasi_x_convex"),
    "semistrict": ("t410", "semistrictly_quasi_x_convex"),
}


def local_global_harness(
    phi: ScalarFn,
    g: GMap,
    M: DomainSet,
    plan: SamplePlan = DEFAULT_PLAN,
    nu: float = 1.0,
    mode: str = "xconvex",
    tol: Tolerances = DEFAULT_TOL,
) -> HarnessReport:
    """Local minima versus the global minimum under the ball condition.

    ``xconvex``/``semistrict``: every local minimum attains the global value.
    ``strictly_xconvex``: additionally the global argmin is a single point.
    ``quasi_strict``: every strict local minimum is the unique global minimizer.
    """
    if mode not in LOCAL_GLOBAL_MODES:
        raise ValueError(f"unknown mode {mode!r}")
    theorem, hyp_class = LOCAL_GLOBAL_MODES[mode]
    ball = check_ball_condition(M, g, eng.effective_plan(plan, M, phi), nu)
    hyp = check_class(phi, g, M, plan, tol, hyp_class)
    reasons = []
    if not ball.holds_on_samples:
        reasons.append(f"ball condition fails: max observed {ball.max_observed!r} >= nu {nu!r}")
    if hyp.status != Status.NO_COUNTEREXAMPLE:
        reasons.append(f"{hyp_class}: {hyp.status.value}")
    if reasons:
        return skipped(theorem, reasons, (ball, hyp), details={"mode": mode})

    pts = sampled_points(M, plan, phi)
    vals = phi.values(pts)
    best = float(vals.min())
    strict = mode == "quasi_strict"
    local = np.flatnonzero(_local_min_mask(vals, pts, nu, strict))
    red = []
    argmin = np.flatnonzero(vals <= best + tol.eps_ineq)
    if strict:
        for k in local:
            if np.count_nonzero(vals <= vals[k]) != 1:
                other = int(np.flatnonzero((vals <= vals[k]) & (np.arange(len(vals)) != k))[0])
                red.append(
                    RedEvent(
                        "strict local minimum is not a strict global minimum",
                        {"local_min": pts[k].tolist(), "value": float(vals[k]), "rival": pts[other].tolist()},
                    )
                )
                break
    else:
        bad = local[vals[local] > best + tol.eps_ineq]
        if len(bad):
            k = int(bad[0])
            red.append(
                RedEvent(
                    "local minimum above the global minimum",
                    {"local_min": pts[k].tolist(), "value": float(vals[k]), "global_min": best},
                )
            )
    if mode == "strictly_xconvex" and len(argmin) != 1:
        red.append(RedEvent("global minimizer is not unique", {"argmins": pts[argmin[:5]].tolist()}))
    return HarnessReport(
        theorem,
        hypotheses=(ball, hyp),
        conclusions=(),
        red_events=tuple(red),
        details={
            "mode": mode,
            "local_minima": int(len(local)),
            "global_min": best,
            "argmin": pts[argmin[0]].tolist(),
            "argmin_count": int(len(argmin)),
        },
    )


def minimum_set_x_convex_harness(
    phi: ScalarFn,
    g: GMap,
    M: DomainSet,
    plan: SamplePlan = DEFAULT_PLAN,
    tol: Tolerances = DEFAULT_TOL,
    theorem_id: str = "t45_min",
) -> HarnessReport:
    """The sampled minimizer set ``G`` must be closed under the combination.

    ``t45_min`` assumes X-convexity, ``t59`` quasi-X-convexity.  A combination
    leaving ``M`` is reported as a red event of its own kind.
    """
    hyp_class = {"t45_min": "x_convex", "t59": "quasi_x_convex"}.get(theorem_id)
    if hyp_class is None:
        raise ValueError(f"unknown minimum-set theorem {theorem_id!r}")
    hyp = check_class(phi, g, M, plan, tol, hyp_class)
    if hyp.status != Status.NO_COUNTEREXAMPLE:
        return skipped(theorem_id, [f"{hyp_class}: {hyp.status.value}"], (hyp,))

    eplan = eng.effective_plan(plan, M, phi)
    ts = eng.triple_set(M, eplan)
    vals = phi.values(ts.points)
    level = float(vals.min()) + tol.eps_ineq
    member = vals <= level
    rows = np.flatnonzero(member[ts.r_idx] & member[ts.t_idx])
    gt = g.apply(ts.points)
    escape = None
    worst = None
    step = max(1, eng.CHUNK_TRIPLES // len(ts.deltas))
    for a in range(0, len(rows), step):
        sel = rows[a : a + step]
        R, T = ts.points[ts.r_idx[sel]], ts.points[ts.t_idx[sel]]
        C = ts.deltas[None, :, None] * (R - T)[:, None, :] + gt[ts.t_idx[sel]][:, None, :]
        flat = C.reshape(-1, M.dim)
        inside = M.contains_many(flat)
        if escape is None and not inside.all():
            k = int(np.flatnonzero(~inside)[0])
            escape = (R[k // len(ts.deltas)], T[k // len(ts.deltas)], float(ts.deltas[k % len(ts.deltas)]), flat[k])
        if inside.any():
            v = np.full(len(flat), -np.inf)
            v[inside] = phi.values(flat[inside])
            k = int(np.argmax(v))
            if v[k] > level and (worst is None or v[k] > worst[4]):
                worst = (R[k // len(ts.deltas)], T[k // len(ts.deltas)], float(ts.deltas[k % len(ts.deltas)]), flat[k], float(v[k]))
    red = []
    if escape is not None:
        r, t, d, c = escape
        red.append(
            RedEvent(
                "combination of two minimizers leaves the domain",
                {"r": r.tolist(), "t": t.tolist(), "delta": d, "combo": c.tolist()},
                annotation="domain escape of the minimizer set: the closure argument presumes combinations stay in M",
            )
        )
    if worst is not None:
        r, t, d, c, v = worst
        red.append(
            RedEvent(
                "combination of two minimizers is not a minimizer",
                {"r": r.tolist(), "t": t.tolist(), "delta": d, "combo": c.tolist(), "value": v, "level": level},
            )
        )
    return HarnessReport(
        theorem_id,
        hypotheses=(hyp,),
        red_events=tuple(red),
        details={"minimizers": int(member.sum()), "pairs_checked": int(len(rows)), "min_value": float(vals.min())},
    )


def uniqueness_harness(
    phi: ScalarFn,
    g: GMap,
    M: DomainSet,
    plan: SamplePlan = DEFAULT_PLAN,
    tol: Tolerances = DEFAULT_TOL,
    theorem_id: str = "t48",
) -> HarnessReport:
    """Under strict quasi-X-convexity the sampled argmin (within ``eps_ineq``) is one point."""
    hyp = check_class(phi, g, M, plan, tol, "strictly_quasi_x_convex")
    if hyp.status != Status.NO_COUNTEREXAMPLE:
        return skipped(theorem_id, [f"strictly_quasi_x_convex: {hyp.status.value}"], (hyp,))
    pts = sampled_points(M, plan, phi)
    vals = phi.values(pts)
    argmin = np.flatnonzero(vals <= vals.min() + tol.eps_ineq)
    red = []
    if len(argmin) != 1:
        red.append(RedEvent("minimum attained at more than one sampled point", {"argmins": pts[argmin[:5]].tolist()}))
    return HarnessReport(
        theorem_id,
        hypotheses=(hyp,),
        red_events=tuple(red),
        details={"argmin": pts[argmin[0]].tolist(), "argmin_count": int(len(argmin))},
    )


# --------------------------------------------------------------------------
# multi-objective


@dataclass(frozen=True)
class ObjectiveVector:
    components: tuple
    g: GMap

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise ValueError("need at least one objective")
        if any(c.dim != self.g.dim for c in self.components):
            raise ValueError("objectives and map must share one dimension")

    @property
    def p(self) -> int:
        return len(self.components)

    def values(self, X) -> np.ndarray:
        return np.stack([c.values(X) for c in self.components], axis=1)


@dataclass(frozen=True)
class EfficiencyVerdict:
    point: tuple
    phi: tuple
    global_efficient: bool
    local_efficient: bool
    global_weakly: bool
    local_weakly: bool
    dominators: tuple = ()  # ((flag name, dominating point), ...)

    def to_json(self) -> dict:
        out = {
            "r": list(self.point),
            "phi": list(self.phi),
            "global_efficient": self.global_efficient,
            "local_efficient": self.local_efficient,
            "global_weakly": self.global_weakly,
            "local_weakly": self.local_weakly,
        }
        if self.dominators:
            out["dominators"] = {k: list(v) for k, v in self.dominators}
        return out


def dominates(a, b, cone: str = "A_minus_zero") -> bool:
    """Whether value vector ``a`` lies in ``b - cone``.

    ``A_minus_zero``: ``a <= b`` componentwise and ``a != b``.
    ``A_prime``: ``a < b`` componentwise.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("value vectors differ in length")
    if cone == "A_minus_zero":
        return bool(np.all(a <= b) and np.any(a < b))
    if cone == "A_prime":
        return bool(np.all(a < b))
    raise ValueError(f"unknown cone {cone!r}")


def _first_true(mask: np.ndarray) -> np.ndarray:
    """Index of the first True per row, -1 where there is none."""
    idx = np.argmax(mask, axis=1)
    return np.where(mask[np.arange(len(mask)), idx], idx, -1)


def _scan(V: np.ndarray, pts: np.ndarray, nu: float):
    n = len(pts)
    firsts = {k: np.full(n, -1) for k in ("global_efficient", "local_efficient", "global_weakly", "local_weakly")}
    for a, near in _neighbour_chunks(pts, nu):
        b = a + len(near)
        rows = V[a:b, None, :]
        le = np.all(V[None, :, :] <= rows, axis=2)
        lt_any = np.any(V[None, :, :] < rows, axis=2)
        lt_all = np.all(V[None, :, :] < rows, axis=2)
        dom = le & lt_any
        firsts["global_efficient"][a:b] = _first_true(dom)
        firsts["local_efficient"][a:b] = _first_true(dom & near)
        firsts["global_weakly"][a:b] = _first_true(lt_all)
        firsts["local_weakly"][a:b] = _first_true(lt_all & near)
    return firsts


def efficiency_scan(
    Phi: ObjectiveVector, M: DomainSet, plan: SamplePlan = DEFAULT_PLAN, nu: float = 0.1
) -> list[EfficiencyVerdict]:
    """Efficiency flags for every sampled point, in sample order.

    Domination uses exact comparisons of values computed once.  Neighbourhoods
    are open Euclidean balls of radius ``nu``.
    """
    if not nu > 0:
        raise ValueError("nu must be positive")
    pts = sampled_points(M, plan, *Phi.components)
    V = Phi.values(pts)
    firsts = _scan(V, pts, nu)
    out = []
    names = ("global_efficient", "local_efficient", "global_weakly", "local_weakly")
    for i in range(len(pts)):
        flags = {k: bool(firsts[k][i] < 0) for k in names}
        doms = tuple((k, tuple(pts[firsts[k][i]].tolist())) for k in names if firsts[k][i] >= 0)
        out.append(EfficiencyVerdict(tuple(pts[i].tolist()), tuple(V[i].tolist()), dominators=doms, **flags))
    return out


EFFICIENCY_THEOREMS = ("t53", "t54", "t55", "t56", "t57")


def _efficiency_hypotheses(Phi, M, plan, tol, theorem_id, mu):
    classes = {
        "t53": ("quasi_x_convex", "semistrictly_quasi_x_convex"),
        "t54": ("quasi_x_convex",),
        "t55": ("quasi_x_convex",),
        "t56": ("semistrictly_quasi_x_convex",),
        "t57": ("semistrictly_quasi_x_convex",),
    }[theorem_id]
    verdicts, reasons = [], []
    for i, phi in enumerate(Phi.components):
        for cls in classes:
            v = check_class(phi, Phi.g, M, plan, tol, cls)
            verdicts.append(v)
            if v.status != Status.NO_COUNTEREXAMPLE:
                reasons.append(f"objective {i + 1}: {cls} {v.status.value}")
    if theorem_id in ("t54", "t55"):
        strict = [check_class(phi, Phi.g, M, plan, tol, "strictly_quasi_x_convex") for phi in Phi.components]
        verdicts.extend(strict)
        ok = [i for i, v in enumerate(strict) if v.status == Status.NO_COUNTEREXAMPLE]
        if theorem_id == "t54":
            ok = [i for i in ok if mu[i] > 0]
        if not ok:
            reasons.append("no objective is strictly quasi-X-convex" + (" with positive weight" if theorem_id == "t54" else ""))
    return verdicts, reasons


def efficiency_theorem_harness(
    Phi: ObjectiveVector,
    M: DomainSet,
    plan: SamplePlan = DEFAULT_PLAN,
    nu: float = 0.1,
    theorem_id: str = "t53",
    mu: Sequence[float] | None = None,
    tol: Tolerances = DEFAULT_TOL,
) -> HarnessReport:
    """Local-to-global efficiency claims on the sampled points.

    ``t53``/``t55``: local efficient implies global efficient.  ``t56``: the
    same for weak efficiency.  ``t54``/``t57``: sampled ``nu``-local minima of
    ``mu . Phi`` are globally efficient (``t54``) or weakly efficient
    (``t57``).  Whenever every weight is positive, sampled global minimizers
    of ``mu . Phi`` are checked for global efficiency as well.
    """
    if theorem_id not in EFFICIENCY_THEOREMS:
        raise ValueError(f"unknown efficiency theorem {theorem_id!r}")
    if mu is not None:
        mu = [float(m) for m in mu]
        if len(mu) != Phi.p or any(m < 0 for m in mu) or not any(m > 0 for m in mu):
            raise ValueError("weights must be non-negative, one per objective, with at least one positive")
    elif theorem_id in ("t54", "t57"):
        raise ValueError(f"{theorem_id} needs weights mu")
    notes = (SAMPLED_NOTE, SCALE_NOTE)
    hyps, reasons = _efficiency_hypotheses(Phi, M, plan, tol, theorem_id, mu)
    if reasons:
        return skipped(theorem_id, reasons, hyps, notes)

    scan = efficiency_scan(Phi, M, plan, nu)
    red = []

    def flag_red(msg, v, flag):
        dom = dict(v.dominators).get(flag)
        red.append(RedEvent(msg, {"r": list(v.point), "phi": list(v.phi), "dominator": None if dom is None else list(dom)}))

    if theorem_id in ("t53", "t55"):
        bad = [v for v in scan if v.local_efficient and not v.global_efficient]
        if bad:
            flag_red("local efficient point is not globally efficient", bad[0], "global_efficient")
    elif theorem_id == "t56":
        bad = [v for v in scan if v.local_weakly and not v.global_weakly]
        if bad:
            flag_red("local weakly efficient point is not globally weakly efficient", bad[0], "global_weakly")

    details = {
        "points": len(scan),
        "global_efficient": sum(v.global_efficient for v in scan),
        "global_weakly": sum(v.global_weakly for v in scan),
    }
    if mu is not None:
        psi = conic(mu, list(Phi.components))
        pts = sampled_points(M, plan, *Phi.components)
        if len(pts) != len(scan):
            raise RuntimeError("scalarized and vector scans disagree on the sample set")
        vals = psi.values(pts)
        local = np.flatnonzero(_local_min_mask(vals, pts, nu, False))
        details["scalar_local_minima"] = [pts[k].tolist() for k in local[:20]]
        details["scalar_local_minima_count"] = int(len(local))
        if theorem_id in ("t54", "t57"):
            flag = "global_efficient" if theorem_id == "t54" else "global_weakly"
            bad = [int(k) for k in local if not getattr(scan[k], flag)]
            if bad:
                flag_red(f"scalarized local minimum is not {flag.replace('_', ' ')}", scan[bad[0]], flag)
        if all(m > 0 for m in mu):
            mins = np.flatnonzero(vals == vals.min())
            bad = [int(k) for k in mins if not scan[k].global_efficient]
            if bad:
                flag_red("scalarization consistency: global minimizer of mu . Phi is dominated", scan[bad[0]], "global_efficient")
    return HarnessReport(theorem_id, hypotheses=tuple(hyps), red_events=tuple(red), notes=notes, details=details)
