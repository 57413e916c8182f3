"""Falsification checks for X-convexity classes.

Every check enumerates sampled ordered pairs ``(r, t)`` and the delta grid,
forms the combination ``delta * (r - t) + g(t)`` and looks for a triple that
breaks the class inequality.  A positive answer is never a proof: it only says
that no counterexample was found on the sample plan.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, replace

import numpy as np

from . import _engine as eng
from .geometry import DomainSet, SamplePlan
from .lang import GMap, ScalarFn

__all__ = [
    "Status",
    "Tolerances",
    "Witness",
    "ClassVerdict",
    "Classification",
    "CONVEX_CLASSES",
    "CONCAVE_CLASSES",
    "ALL_CLASSES",
    "combination_point",
    "check_x_convex_set",
    "check_x_convex",
    "check_strictly_x_convex",
    "check_quasi_x_convex",
    "check_strictly_quasi_x_convex",
    "check_semistrictly_quasi_x_convex",
    "check_concave_variants",
    "check_class",
    "classify",
    "recheck_triple",
    "verify_witness",
]

DEFAULT_PLAN = SamplePlan()


class Status(str, enum.Enum):
    NO_COUNTEREXAMPLE = "no_counterexample_found"
    FALSIFIED = "falsified"
    DOMAIN_ESCAPE = "domain_escape"

    def __str__(self) -> str:
        return self.value


CONVEX_CLASSES = (
    "x_convex",
    "strictly_x_convex",
    "quasi_x_convex",
    "strictly_quasi_x_convex",
    "semistrictly_quasi_x_convex",
)
CONCAVE_CLASSES = tuple(c.replace("convex", "concave") for c in CONVEX_CLASSES)
ALL_CLASSES = CONVEX_CLASSES + CONCAVE_CLASSES

_STRICT = {
    "strictly_x_convex",
    "strictly_quasi_x_convex",
    "semistrictly_quasi_x_convex",
}


STRICT_RHS_NOTE = "strict inequality is against delta*phi(r) + (1 - delta)*phi(t)"


def mirror_of(class_name: str) -> str:
    """The convex class a concave class mirrors (identity for convex classes)."""
    return class_name.replace("concave", "convex")


def is_strict(class_name: str) -> bool:
    return mirror_of(class_name) in _STRICT


@dataclass(frozen=True)
class Tolerances:
    eps_ineq: float = 1e-9
    eps_strict: float = 1e-9
    eps_val_eq: float = 1e-12

    def __post_init__(self):
        for name in ("eps_ineq", "eps_strict", "eps_val_eq"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and non-negative")
            object.__setattr__(self, name, v)
        if self.eps_strict <= 0:
            raise ValueError("eps_strict must be positive")

    @classmethod
    def from_json(cls, obj: dict | None) -> Tolerances:
        obj = dict(obj or {})
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown tolerance fields: {sorted(unknown)}")
        return cls(**obj)

    def to_json(self) -> dict:
        return {"eps_ineq": self.eps_ineq, "eps_strict": self.eps_strict, "eps_val_eq": self.eps_val_eq}


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class Witness:
    """A concrete triple together with both sides of the checked relation."""

    r: tuple
    t: tuple
    delta: float
    combo: tuple
    lhs: float
    rhs: float
    gap: float
    kind: str = "inequality-violation"

    def to_json(self) -> dict:
        return {
            "r": list(self.r),
            "t": list(self.t),
            "delta": self.delta,
            "combo": list(self.combo),
            "lhs": self.lhs,
            "rhs": self.rhs,
            "gap": self.gap,
            "kind": self.kind,
        }

    @classmethod
    def from_json(cls, obj: dict) -> Witness:
        return cls(
            tuple(float(v) for v in obj["r"]),
            tuple(float(v) for v in obj["t"]),
            float(obj["delta"]),
            tuple(float(v) for v in obj["combo"]),
            float(obj["lhs"]),
            float(obj["rhs"]),
            float(obj["gap"]),
            obj.get("kind", "inequality-violation"),
        )


@dataclass(frozen=True)
class ClassVerdict:
    class_name: str
    status: Status
    witness: Witness | None = None
    triples_checked: int = 0
    max_gap: float | None = None
    eta: float | None = None
    notes: tuple = ()

    @property
    def holds(self) -> bool:
        return self.status == Status.NO_COUNTEREXAMPLE

    def to_json(self) -> dict:
        out = {
            "class": self.class_name,
            "status": self.status.value,
            "witness": None if self.witness is None else self.witness.to_json(),
            "triples_checked": self.triples_checked,
            "max_gap": self.max_gap,
        }
        if self.eta is not None:
            out["eta"] = self.eta
        if self.notes:
            out["notes"] = list(self.notes)
        return out


# --------------------------------------------------------------------------
# combination operator


def combination_point(r, t, delta: float, g: GMap) -> np.ndarray:
    """``delta * (r - t) + g(t)``, componentwise."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if r.shape != t.shape or len(r) != g.dim:
        raise ValueError("r, t and g must share one dimension")
    if not 0.0 <= delta <= 1.0:
        raise ValueError("delta must lie in [0, 1]")
    d = np.array([float(delta)])
    return (d[:, None] * (r - t)[None, :] + g.apply(t[None, :]))[0]


def _rhs(class_name: str, fr: float, ft: float, delta: float) -> tuple[float, float]:
    """(lhs sign, rhs) for the class; concave classes act on -phi."""
    d = np.array([delta])
    om = 1.0 - d
    base = mirror_of(class_name)
    sign = -1.0 if class_name != base else 1.0
    a, b = sign * fr, sign * ft
    if base in ("x_convex", "strictly_x_convex"):
        return sign, float((d * a + om * b)[0])
    return sign, max(a, b)


def recheck_triple(phi: ScalarFn, g: GMap, class_name: str, r, t, delta: float) -> tuple[np.ndarray, float, float]:
    """Re-evaluate ``(combo, lhs, rhs)`` for a triple from scratch."""
    combo = combination_point(r, t, delta, g)
    fr, ft = phi(r), phi(t)
    fc = phi(combo)
    sign, rhs = _rhs(class_name, fr, ft, delta)
    return combo, sign * fc, rhs


# --------------------------------------------------------------------------
# sweeps


def _set_chunk(ts, gt, M, a, b):
    C = eng.combos(ts, gt, a, b)
    dist = eng.escape_distances(M, C, eng.row_bounds(ts, gt, a, b))
    return eng.row_candidate(dist.max(axis=1), None, a)


def _escape_witness(ts, gt, support, cand) -> Witness:
    k = cand[1][0]
    C = eng.combos(ts, gt, k, k + 1)
    dist = eng.escape_distances(support, C, eng.row_bounds(ts, gt, k, k + 1))[0]
    col = int(np.flatnonzero(dist == cand[0])[0])
    r = ts.points[ts.r_idx[k]]
    t = ts.points[ts.t_idx[k]]
    return Witness(
        tuple(r.tolist()),
        tuple(t.tolist()),
        float(ts.deltas[col]),
        tuple(C[0, col].tolist()),
        float(dist[col]),
        0.0,
        float(dist[col]),
        kind="domain-escape",
    )


@functools.lru_cache(maxsize=256)
def _set_scan(M: DomainSet, g: GMap, plan: SamplePlan):
    ts = eng.triple_set(M, plan)
    gt = g.apply(ts.points)
    best = eng.reduce_candidates(eng.map_chunks(lambda a, b: _set_chunk(ts, gt, M, a, b), ts.chunks()))
    return best if best is not None and best[0] > 0.0 else None


def check_x_convex_set(M: DomainSet, g: GMap, plan: SamplePlan = DEFAULT_PLAN) -> ClassVerdict:
    """Look for a sampled triple whose combination leaves ``M``.

    The violation size is the Euclidean distance from the combination to
    ``M``; the largest one is reported.
    """
    _check_dims(M, g)
    ts = eng.triple_set(M, plan)
    total = ts.n_pairs * len(ts.deltas)
    best = _set_scan(M, g, plan)
    if best is None:
        return ClassVerdict("x_convex_set", Status.NO_COUNTEREXAMPLE, None, total, 0.0)
    w = _escape_witness(ts, gt=g.apply(ts.points), support=M, cand=best)
    return ClassVerdict("x_convex_set", Status.DOMAIN_ESCAPE, w, total, w.gap)


def _check_dims(M: DomainSet, g: GMap, phi: ScalarFn | None = None):
    if g.dim != M.dim or (phi is not None and phi.dim != M.dim):
        raise ValueError("domain, map and function dimensions disagree")


@dataclass(frozen=True)
class _Sweep:
    """Per-class best (value, key) candidates over one triple set."""

    escape: tuple | None
    channels: dict
    counts: dict


def _gap_channels(lhs, fr, ft, deltas):
    """Gap arrays ``(pairs, deltas)`` keyed by the quantity they bound."""
    d = deltas[None, :]
    conv = d * fr[:, None] + (1.0 - d) * ft[:, None]
    return {
        "conv": lhs - conv,
        "max": lhs - np.maximum(fr, ft)[:, None],
        "min": np.minimum(fr, ft)[:, None] - lhs,
    }


def _class_gap(G: dict, class_name: str) -> np.ndarray:
    base = mirror_of(class_name)
    concave = base != class_name
    if base in ("x_convex", "strictly_x_convex"):
        return -G["conv"] if concave else G["conv"]
    return G["min"] if concave else G["max"]


def _row_masks(class_name, ri, ti, fr, ft, tol):
    base = mirror_of(class_name)
    if base in ("x_convex", "quasi_x_convex"):
        return None
    if base == "semistrictly_quasi_x_convex":
        return np.abs(fr - ft) > tol.eps_val_eq
    return ri != ti


def _inequality_chunk(values, ts, gt, fv, support, tol, a, b):
    C = eng.combos(ts, gt, a, b)
    if support is not None:
        dist = eng.escape_distances(support, C, eng.row_bounds(ts, gt, a, b))
        esc = eng.row_candidate(dist.max(axis=1), None, a)
        if esc is not None and esc[0] > 0.0:
            return esc, None, None

    p, D, n = C.shape
    ri, ti = ts.r_idx[a:b], ts.t_idx[a:b]
    fr, ft = fv[ri], fv[ti]
    lhs = values(C.reshape(-1, n)).reshape(p, D)
    d = ts.deltas[None, :]
    conv = lhs - (d * fr[:, None] + (1.0 - d) * ft[:, None])

    # Row extremes over interior deltas, then folded with the endpoints.  The
    # max/min channels subtract a per-row constant, and rounding is monotone,
    # so they follow from the row extremes of lhs alone.
    def extremes(arr):
        if D > 2:
            hi, lo = arr[:, 1:-1].max(axis=1), arr[:, 1:-1].min(axis=1)
        else:
            hi, lo = np.full(p, -np.inf), np.full(p, np.inf)
        ends_hi = np.maximum(arr[:, 0], arr[:, -1])
        ends_lo = np.minimum(arr[:, 0], arr[:, -1])
        return hi, np.maximum(hi, ends_hi), lo, np.minimum(lo, ends_lo)

    c_hi_in, c_hi, c_lo_in, c_lo = extremes(conv)
    l_hi_in, l_hi, l_lo_in, l_lo = extremes(lhs)
    top, bottom = np.maximum(fr, ft), np.minimum(fr, ft)
    inner = {"conv": c_hi_in, "-conv": -c_lo_in, "max": l_hi_in - top, "min": bottom - l_lo_in}
    full = {"conv": c_hi, "-conv": -c_lo, "max": l_hi - top, "min": bottom - l_lo}

    channels, counts = {}, {}
    for name in ALL_CLASSES:
        base = mirror_of(name)
        concave = base != name
        key = ("-conv" if concave else "conv") if base in ("x_convex", "strictly_x_convex") else (
            "min" if concave else "max"
        )
        strict = base in _STRICT
        rowvals = inner[key] if strict else full[key]
        mask = _row_masks(name, ri, ti, fr, ft, tol)
        ncols = max(D - 2, 0) if strict else D
        rows = p if mask is None else int(mask.sum())
        counts[name] = rows * ncols
        channels[name] = eng.row_candidate(rowvals, mask, a) if ncols and rows else None
    return None, channels, counts


def _support(phi: ScalarFn, M: DomainSet) -> DomainSet:
    return phi.domain if phi.domain is not None else M


@functools.lru_cache(maxsize=256)
def _sweep(phi: ScalarFn, g: GMap, M: DomainSet, plan: SamplePlan, tol: Tolerances) -> _Sweep:
    _check_dims(M, g, phi)
    support = _support(phi, M)
    if support == M:
        # the set scan already answers the escape question for this support
        escape = _set_scan(M, g, plan)
        if escape is not None:
            return _Sweep(escape, {}, {})
        support = None
    elif support.is_whole_space:
        support = None
    ts = eng.triple_set(M, plan)
    gt = g.apply(ts.points)
    fv = phi.values(ts.points)
    results = eng.map_chunks(
        lambda a, b: _inequality_chunk(phi.values, ts, gt, fv, support, tol, a, b), ts.chunks()
    )
    escape = eng.reduce_candidates(r[0] for r in results)
    if escape is not None:
        return _Sweep(escape, {}, {})
    channels = {name: eng.reduce_candidates(r[1][name] for r in results) for name in ALL_CLASSES}
    counts = {name: sum(r[2][name] for r in results) for name in ALL_CLASSES}
    return _Sweep(None, channels, counts)


def _inequality_witness(phi, g, M, plan, class_name, cand) -> Witness:
    """Rebuild the winning triple of a channel from its row index."""
    ts = eng.triple_set(M, plan)
    k = cand[1][0]
    i, j = ts.r_idx[k], ts.t_idx[k]
    gt = g.apply(ts.points[[j]])
    R, T = ts.points[[i]], ts.points[[j]]
    C = ts.deltas[None, :, None] * (R - T)[:, None, :] + gt[:, None, :]
    fr, ft = phi.values(R), phi.values(T)
    lhs = phi.values(C[0])[None, :]
    gap = _class_gap(_gap_channels(lhs, fr, ft, ts.deltas), class_name)[0]
    cols = np.arange(len(ts.deltas))
    if is_strict(class_name):
        cols = cols[1:-1]
    hits = cols[gap[cols] == cand[0]]
    col = int(hits[0]) if len(hits) else int(cols[np.argmax(gap[cols])])
    delta = float(ts.deltas[col])
    fc = float(lhs[0, col])
    sign, rhs = _rhs(class_name, float(fr[0]), float(ft[0]), delta)
    return Witness(
        tuple(R[0].tolist()),
        tuple(T[0].tolist()),
        delta,
        tuple(C[0, col].tolist()),
        sign * fc,
        rhs,
        float(gap[col]),
    )


def check_class(
    phi: ScalarFn,
    g: GMap,
    M: DomainSet,
    plan: SamplePlan = DEFAULT_PLAN,
    tol: Tolerances = DEFAULT_TOL,
    class_name: str = "x_convex",
) -> ClassVerdict:
    """Run the falsifier for one class (convex or concave)."""
    if class_name not in ALL_CLASSES:
        raise ValueError(f"unknown class {class_name!r}")
    v = _check_class(phi, g, M, plan, tol, class_name)
    if mirror_of(class_name) == "strictly_x_convex":
        v = replace(v, notes=v.notes + (STRICT_RHS_NOTE,))
    return v


def _check_class(phi, g, M, plan, tol, class_name) -> ClassVerdict:
    plan = eng.effective_plan(plan, M, phi)
    sw = _sweep(phi, g, M, plan, tol)
    ts = eng.triple_set(M, plan)
    if sw.escape is not None:
        gt = g.apply(ts.points)
        w = _escape_witness(ts, gt, _support(phi, M), sw.escape)
        return ClassVerdict(class_name, Status.DOMAIN_ESCAPE, w, ts.n_pairs * len(ts.deltas), w.gap)
    cand = sw.channels[class_name]
    count = sw.counts[class_name]
    if cand is None:
        return ClassVerdict(class_name, Status.NO_COUNTEREXAMPLE, None, count, None)
    value = cand[0]
    failed = value > -tol.eps_strict if is_strict(class_name) else value > tol.eps_ineq
    if not failed:
        return ClassVerdict(class_name, Status.NO_COUNTEREXAMPLE, None, count, value)
    w = _inequality_witness(phi, g, M, plan, class_name, cand)
    return ClassVerdict(class_name, Status.FALSIFIED, w, count, value)


def check_x_convex(phi, g, M, plan=DEFAULT_PLAN, tol=DEFAULT_TOL) -> ClassVerdict:
    """``phi(combo) <= delta*phi(r) + (1-delta)*phi(t)`` on every sampled triple."""
    return check_class(phi, g, M, plan, tol, "x_convex")


def check_strictly_x_convex(phi, g, M, plan=DEFAULT_PLAN, tol=DEFAULT_TOL) -> ClassVerdict:
    """Strict version of :func:`check_x_convex` for ``r != t`` and interior deltas."""
    return check_class(phi, g, M, plan, tol, "strictly_x_convex")


def check_quasi_x_convex(phi, g, M, plan=DEFAULT_PLAN, tol=DEFAULT_TOL) -> ClassVerdict:
    """``phi(combo) <= max(phi(r), phi(t))`` on every sampled triple."""
    return check_class(phi, g, M, plan, tol, "quasi_x_convex")


def check_strictly_quasi_x_convex(phi, g, M, plan=DEFAULT_PLAN, tol=DEFAULT_TOL) -> ClassVerdict:
    return check_class(phi, g, M, plan, tol, "strictly_quasi_x_convex")


def check_semistrictly_quasi_x_convex(phi, g, M, plan=DEFAULT_PLAN, tol=DEFAULT_TOL) -> ClassVerdict:
    """Strict quasi inequality, only for pairs whose values differ by more than ``eps_val_eq``."""
    return check_class(phi, g, M, plan, tol, "semistrictly_quasi_x_convex")


def check_concave_variants(phi, g, M, plan=DEFAULT_PLAN, tol=DEFAULT_TOL, class_name="x_concave") -> ClassVerdict:
    """Concave classes: the matching convex class applied to ``-phi``.

    Either spelling is accepted (``quasi_x_concave`` or ``quasi_x_convex``).
    """
    name = class_name.replace("convex", "concave")
    return check_class(phi, g, M, plan, tol, name)


# --------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class Classification:
    """All ten class verdicts plus the set check for one (phi, g, M)."""

    set_verdict: ClassVerdict
    verdicts: tuple
    issues: tuple = ()

    def __iter__(self):
        return iter(self.verdicts)

    def __len__(self) -> int:
        return len(self.verdicts)

    def __getitem__(self, name: str) -> ClassVerdict:
        for v in self.verdicts:
            if v.class_name == name:
                return v
        raise KeyError(name)

    def status(self, name: str) -> Status:
        return self[name].status

    def to_json(self) -> dict:
        return {
            "set": self.set_verdict.to_json(),
            "verdicts": [v.to_json() for v in self.verdicts],
            "issues": list(self.issues),
        }


def _endpoint_or_diagonal(w: Witness) -> bool:
    return w.delta in (0.0, 1.0) or w.r == w.t


def _consistency(phi, g, verdicts: dict, tol: Tolerances) -> list[str]:
    issues = []
    for suffix in ("convex", "concave"):
        x, q = verdicts[f"x_{suffix}"], verdicts[f"quasi_x_{suffix}"]
        if x.status == Status.NO_COUNTEREXAMPLE and q.status == Status.FALSIFIED:
            w = q.witness
            _, lhs, rhs = recheck_triple(phi, g, q.class_name, w.r, w.t, w.delta)
            issues.append(
                f"x_{suffix} found no counterexample but quasi_x_{suffix} did "
                f"(recheck gap {lhs - rhs!r})"
            )
        pairs = (
            (f"strictly_x_{suffix}", f"x_{suffix}"),
            (f"strictly_quasi_x_{suffix}", f"quasi_x_{suffix}"),
        )
        for strict, weak in pairs:
            s, v = verdicts[strict], verdicts[weak]
            if s.status == Status.NO_COUNTEREXAMPLE and v.status == Status.FALSIFIED:
                if not _endpoint_or_diagonal(v.witness):
                    issues.append(f"{strict} found no counterexample but {weak} failed at an interior triple")
    return issues


def classify(
    phi: ScalarFn,
    g: GMap,
    M: DomainSet,
    plan: SamplePlan = DEFAULT_PLAN,
    tol: Tolerances = DEFAULT_TOL,
) -> Classification:
    """Set check plus all five classes and their concave mirrors.

    Implication checks between classes run on every call; any violation is
    listed in ``issues`` (it would indicate a bug, not a property of ``phi``).
    """
    plan = eng.effective_plan(plan, M, phi)
    set_v = check_x_convex_set(M, g, plan)
    verdicts = {name: check_class(phi, g, M, plan, tol, name) for name in ALL_CLASSES}
    issues = _consistency(phi, g, verdicts, tol)
    return Classification(set_v, tuple(verdicts[n] for n in ALL_CLASSES), tuple(issues))


# --------------------------------------------------------------------------
# witness verification


def verify_witness(
    phi: ScalarFn | None,
    g: GMap,
    M: DomainSet,
    verdict: ClassVerdict,
    tol: Tolerances = DEFAULT_TOL,
    ulps: int = 4,
) -> tuple[bool, str]:
    """Independently re-evaluate a stored witness.

    Returns ``(ok, message)``.  ``ok`` means the recomputed combination and gap
    match the stored ones and still show the claimed violation.
    """
    w = verdict.witness
    if w is None:
        return verdict.status == Status.NO_COUNTEREXAMPLE, "no witness stored"
    combo = combination_point(w.r, w.t, w.delta, g)
    scale = np.maximum(np.abs(combo), 1.0)
    if np.any(np.abs(combo - np.asarray(w.combo)) > ulps * np.finfo(float).eps * scale):
        return False, f"combination mismatch: stored {list(w.combo)}, recomputed {combo.tolist()}"
    if w.kind == "domain-escape":
        support = M if phi is None or phi.domain is None else phi.domain
        if verdict.class_name == "x_convex_set":
            support = M
        dist = float(support.distance_many(combo[None, :])[0])
        ok = not support.contains(combo) and dist > 0.0
        return ok, f"combination {combo.tolist()} at distance {dist!r} from the domain"
    if phi is None:
        raise ValueError("an inequality witness needs the function")
    _, lhs, rhs = recheck_triple(phi, g, verdict.class_name, w.r, w.t, w.delta)
    gap = lhs - rhs
    bound = ulps * np.finfo(float).eps * max(abs(lhs), abs(rhs), 1.0)
    same = abs(gap - w.gap) <= bound
    violated = gap > -tol.eps_strict if is_strict(verdict.class_name) else gap > tol.eps_ineq
    msg = f"lhs={lhs!r} rhs={rhs!r} gap={gap!r} (stored {w.gap!r})"
    return bool(same and violated), msg
