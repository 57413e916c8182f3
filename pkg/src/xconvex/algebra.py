"""Building new functions from old ones, and the closure-theorem harnesses."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _engine as eng
from .checker import DEFAULT_PLAN, DEFAULT_TOL, Status, Tolerances, check_class
from .geometry import DomainSet, SamplePlan
from .harness import SAMPLED_NOTE, HarnessReport, PreconditionError, RedEvent, skipped
from .lang import BinOp, ExprError, Num, ScalarFn, substitute

__all__ = [
    "OuterFn",
    "compose",
    "sum_fn",
    "scale",
    "conic",
    "validate_outer",
    "theorem_closure_harness",
    "CLOSURE_THEOREMS",
]

CLOSURE_THEOREMS = ("t42", "t43a", "t43b", "t43c", "t49")


@dataclass(frozen=True)
class OuterFn:
    """A one-variable function to compose with, plus the shape claims made about it."""

    theta: ScalarFn
    monotone_nondecreasing: bool = False
    convex: bool = False

    def __post_init__(self):
        if self.theta.dim != 1:
            raise ValueError("an outer function takes one variable")

    @classmethod
    def from_text(cls, text: str, params=None, monotone_nondecreasing=False, convex=False) -> OuterFn:
        return cls(ScalarFn.from_text(text, 1, params), monotone_nondecreasing, convex)


def _merge_params(*fns: ScalarFn) -> dict:
    merged: dict[str, float] = {}
    for fn in fns:
        for k, v in fn.params:
            if k in merged and merged[k] != v:
                raise ExprError(f"parameter {k!r} is bound to different values")
            merged[k] = v
    return merged


def _shared_domain(fns: Sequence[ScalarFn]) -> DomainSet | None:
    domains = {fn.domain for fn in fns}
    if len(domains) > 1:
        raise ValueError("functions are defined on different domains")
    return domains.pop()


def _check_dims(fns: Sequence[ScalarFn]) -> int:
    dims = {fn.dim for fn in fns}
    if len(dims) != 1:
        raise ValueError("functions live in different dimensions")
    return dims.pop()


def compose(theta: OuterFn | ScalarFn, phi: ScalarFn) -> ScalarFn:
    """``theta(phi(x))``."""
    outer = theta.theta if isinstance(theta, OuterFn) else theta
    if outer.dim != 1:
        raise ValueError("an outer function takes one variable")
    body = substitute(outer.body, {0: phi.body})
    return ScalarFn(body, phi.dim, _merge_params(outer, phi), phi.domain)


def sum_fn(phi1: ScalarFn, phi2: ScalarFn) -> ScalarFn:
    """``phi1 + phi2``."""
    dim = _check_dims([phi1, phi2])
    return ScalarFn(BinOp("+", phi1.body, phi2.body), dim, _merge_params(phi1, phi2), _shared_domain([phi1, phi2]))


def scale(alpha: float, phi: ScalarFn) -> ScalarFn:
    """``alpha * phi`` for ``alpha >= 0``; ``alpha = 0`` gives the constant 0."""
    alpha = float(alpha)
    if not (alpha >= 0 and math.isfinite(alpha)):
        raise ValueError("alpha must be a finite non-negative real")
    if alpha == 0.0:
        return ScalarFn(Num(0.0), phi.dim, (), phi.domain)
    if alpha == 1.0:
        return phi
    return ScalarFn(BinOp("*", Num(alpha), phi.body), phi.dim, phi.params, phi.domain)


def conic(coeffs: Sequence[float], phis: Sequence[ScalarFn]) -> ScalarFn:
    """``sum c_i * phi_i`` with non-negative ``c_i``."""
    if len(coeffs) != len(phis) or not phis:
        raise ValueError("need one coefficient per function and at least one function")
    dim = _check_dims(phis)
    terms = [scale(c, f) for c, f in zip(coeffs, phis)]
    body = terms[0].body
    for term in terms[1:]:
        body = BinOp("+", body, term.body)
    return ScalarFn(body, dim, _merge_params(*phis), _shared_domain(phis))


# --------------------------------------------------------------------------
# outer-function validation


def _range_grid(values: np.ndarray, n: int = 2001) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    pad = 0.01 * (hi - lo) if hi > lo else 0.01 * max(abs(lo), 1.0)
    return np.linspace(lo - pad, hi + pad, n)


def validate_outer(theta: OuterFn, phi: ScalarFn, M: DomainSet, plan: SamplePlan = DEFAULT_PLAN, tol=DEFAULT_TOL):
    """Check the claimed shape of ``theta`` on the sampled range of ``phi`` (padded 1%).

    Returns a list of problems (empty when every set flag holds).
    """
    plan = eng.effective_plan(plan, M, phi)
    values = phi.values(eng.triple_set(M, plan).points)
    x = np.union1d(_range_grid(values), values)
    y = theta.theta.values(x)
    problems = []
    scale_ = np.maximum(np.abs(y), 1.0)
    if theta.monotone_nondecreasing:
        drop = y[:-1] - y[1:]
        if np.any(drop > tol.eps_ineq * scale_[1:]):
            k = int(np.argmax(drop))
            problems.append(f"theta decreases between {float(x[k])!r} and {float(x[k + 1])!r}")
    if theta.convex:
        grid = _range_grid(values)
        yg = theta.theta.values(grid)
        mid = theta.theta.values(0.5 * (grid[:-2] + grid[2:]))
        excess = mid - 0.5 * (yg[:-2] + yg[2:])
        if np.any(excess > tol.eps_ineq * np.maximum(np.abs(mid), 1.0)):
            k = int(np.argmax(excess))
            problems.append(f"midpoint inequality fails on [{float(grid[k])!r}, {float(grid[k + 2])!r}]")
    return problems


# --------------------------------------------------------------------------
# harness


def _gate_outer(theta, phi, M, plan, tol):
    if not isinstance(theta, OuterFn):
        raise PreconditionError("the outer function must be an OuterFn")
    if not (theta.monotone_nondecreasing and theta.convex):
        raise PreconditionError("the outer function must be declared non-decreasing and convex")
    problems = validate_outer(theta, phi, M, plan, tol)
    if problems:
        raise PreconditionError("; ".join(problems))


def theorem_closure_harness(
    inputs,
    g,
    M: DomainSet,
    plan: SamplePlan = DEFAULT_PLAN,
    tol: Tolerances = DEFAULT_TOL,
    theorem_id: str = "t43a",
) -> HarnessReport:
    """Check a closure theorem on one instance.

    ``inputs`` by theorem: ``t42``/``t49`` ``(theta, phi)``; ``t43a``
    ``(phi1, phi2)``; ``t43b`` ``(alpha, phi)``; ``t43c`` ``(coeffs, phis)``.
    The hypotheses are class checks on the inputs; the conclusion is a class
    check on the built function.  A failing conclusion with passing
    hypotheses is a red event.
    """
    notes = [SAMPLED_NOTE]
    if theorem_id in ("t42", "t49"):
        theta, phi = inputs
        _gate_outer(theta, phi, M, plan, tol)
        built = compose(theta, phi)
        hyp_class = "x_convex" if theorem_id == "t42" else "quasi_x_convex"
        hyps = [check_class(phi, g, M, plan, tol, hyp_class)]
        concl_class = hyp_class
        if theorem_id == "t49":
            notes.append("conclusion tested as quasi-X-convexity, which is what the argument establishes")
    elif theorem_id == "t43a":
        phi1, phi2 = inputs
        built = sum_fn(phi1, phi2)
        hyps = [check_class(f, g, M, plan, tol, "x_convex") for f in (phi1, phi2)]
        concl_class = "x_convex"
    elif theorem_id == "t43b":
        alpha, phi = inputs
        if float(alpha) < 0:
            raise PreconditionError("alpha must be non-negative")
        built = scale(alpha, phi)
        hyps = [check_class(phi, g, M, plan, tol, "x_convex")]
        concl_class = "x_convex"
    elif theorem_id == "t43c":
        coeffs, phis = inputs
        if any(float(c) < 0 for c in coeffs):
            raise PreconditionError("coefficients must be non-negative")
        built = conic(coeffs, phis)
        hyps = [check_class(f, g, M, plan, tol, "x_convex") for f in phis]
        concl_class = "x_convex"
    else:
        raise ValueError(f"unknown closure theorem {theorem_id!r}")

    failing = [h for h in hyps if h.status != Status.NO_COUNTEREXAMPLE]
    if failing:
        reasons = [f"input {i + 1}: {h.class_name} {h.status.value}" for i, h in enumerate(hyps) if h in failing]
        return skipped(theorem_id, reasons, hyps, notes)
    concl = check_class(built, g, M, plan, tol, concl_class)
    red = []
    if concl.status != Status.NO_COUNTEREXAMPLE:
        red.append(
            RedEvent(
                f"built function is not {concl_class} on the samples ({concl.status.value})",
                concl.witness.to_json() if concl.witness else None,
            )
        )
    return HarnessReport(
        theorem_id,
        hypotheses=tuple(hyps),
        conclusions=(concl,),
        red_events=tuple(red),
        notes=tuple(notes),
        details={"built": built.text},
    )
