"""Problem files: loading, validation and task execution."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

from . import algebra, optimize, sets
from .checker import (
    CONVEX_CLASSES,
    Status,
    Tolerances,
    check_x_convex_set,
    classify,
)
from .geometry import DomainSet, SamplePlan
from .harness import PreconditionError
from .lang import ExprError, GMap, ScalarFn

__all__ = ["ProblemError", "ProblemFile", "run_problem", "TASK_TYPES", "HARNESS_THEOREMS"]

TASK_TYPES = ("check-set", "classify", "levelsets", "epigraph", "optimize", "pareto", "harness")
HARNESS_THEOREMS = (
    "t41",
    "t42",
    "t43a",
    "t43b",
    "t43c",
    "t44",
    "t45",
    "t45_min",
    "t46",
    "t47",
    "t48",
    "t49",
    "t410",
    "t53",
    "t54",
    "t55",
    "t56",
    "t57",
    "t58",
    "t59",
)


class ProblemError(ValueError):
    """The problem file is malformed or inconsistent."""


def _domain_from(obj, dim: int) -> DomainSet | None:
    if obj is None:
        return None
    if obj == "whole":
        return DomainSet.whole(dim)
    return DomainSet.from_json(obj)


@dataclass(frozen=True)
class ProblemFile:
    raw: dict
    id: str
    domain: DomainSet
    g: GMap
    functions: dict
    plan: SamplePlan
    tolerances: Tolerances
    tasks: tuple

    @classmethod
    def load(cls, path) -> ProblemFile:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ProblemError(f"cannot read {path}: {exc}") from exc
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ProblemError(f"invalid JSON in {path}: {exc}") from exc
        return cls.from_json(obj)

    @classmethod
    def from_json(cls, obj: dict) -> ProblemFile:
        if not isinstance(obj, dict):
            raise ProblemError("a problem file must be a JSON object")
        try:
            return cls._parse(obj)
        except ProblemError:
            raise
        except (ExprError, ValueError, KeyError, TypeError) as exc:
            raise ProblemError(f"{type(exc).__name__}: {exc}") from exc

    @classmethod
    def _parse(cls, obj: dict) -> ProblemFile:
        known = {"id", "domain", "g", "params", "functions", "plan", "tolerances", "tasks", "description"}
        unknown = set(obj) - known
        if unknown:
            raise ProblemError(f"unknown top-level fields: {sorted(unknown)}")
        if "domain" not in obj:
            raise ProblemError("missing field 'domain'")
        domain = DomainSet.from_json(obj["domain"])
        params = {str(k): float(v) for k, v in (obj.get("params") or {}).items()}
        g_texts = obj.get("g")
        if g_texts is None:
            g = GMap.identity(domain.dim)
        else:
            if isinstance(g_texts, str):
                g_texts = [g_texts]
            g = GMap.from_text(g_texts, params)
        if g.dim != domain.dim:
            raise ProblemError(f"g has {g.dim} components but the domain has dimension {domain.dim}")
        functions = {}
        for name, entry in (obj.get("functions") or {}).items():
            if isinstance(entry, str):
                entry = {"expr": entry}
            local = dict(params)
            local.update({str(k): float(v) for k, v in (entry.get("params") or {}).items()})
            fn = ScalarFn.from_text(entry["expr"], domain.dim, local, name=name)
            dom = _domain_from(entry.get("domain"), domain.dim)
            functions[name] = fn.with_domain(dom) if dom is not None else fn
        plan = SamplePlan.from_json(obj.get("plan"))
        tol = Tolerances.from_json(obj.get("tolerances"))
        tasks = obj.get("tasks")
        if not tasks:
            raise ProblemError("at least one task is required")
        for i, task in enumerate(tasks):
            _validate_task(i, task, functions)
        return cls(obj, str(obj.get("id", "problem")), domain, g, functions, plan, tol, tuple(tasks))

    def with_seed(self, seed: int) -> ProblemFile:
        raw = json.loads(json.dumps(self.raw))
        raw.setdefault("plan", {})["seed"] = int(seed)
        return replace(self, raw=raw, plan=replace(self.plan, seed=int(seed)))

    def function(self, name: str | None) -> ScalarFn:
        if name is None:
            if len(self.functions) != 1:
                raise ProblemError("task must name its function")
            return next(iter(self.functions.values()))
        return self.functions[name]


def _validate_task(i: int, task, functions: dict):
    if not isinstance(task, dict) or "type" not in task:
        raise ProblemError(f"task {i}: must be an object with a 'type'")
    kind = task["type"]
    if kind not in TASK_TYPES:
        raise ProblemError(f"task {i}: unknown type {kind!r}")
    names = []
    if "function" in task:
        names.append(task["function"])
    names += list(task.get("functions", []))
    for n in names:
        if n not in functions:
            raise ProblemError(f"task {i}: unknown function {n!r}")
    needs_fn = kind in ("classify", "levelsets", "epigraph", "optimize")
    if needs_fn and "function" not in task and len(functions) != 1:
        raise ProblemError(f"task {i}: 'function' is required")
    if kind == "pareto" and not task.get("functions"):
        raise ProblemError(f"task {i}: 'functions' is required")
    if kind == "harness":
        th = task.get("theorem")
        if th not in HARNESS_THEOREMS:
            raise ProblemError(f"task {i}: unknown theorem {th!r}")
        if th in ("t42", "t49") and not isinstance(task.get("outer"), dict):
            raise ProblemError(f"task {i}: {th} needs an 'outer' function")
    for key in ("nu",):
        if key in task and not (isinstance(task[key], (int, float)) and task[key] > 0 and math.isfinite(task[key])):
            raise ProblemError(f"task {i}: '{key}' must be a positive number")


# --------------------------------------------------------------------------
# execution


def _failing(status: Status) -> bool:
    return status != Status.NO_COUNTEREXAMPLE


def _outer(entry: dict) -> algebra.OuterFn:
    return algebra.OuterFn.from_text(
        entry["expr"],
        entry.get("params"),
        bool(entry.get("monotone_nondecreasing", False)),
        bool(entry.get("convex", False)),
    )


def _run_harness(pf: ProblemFile, task: dict):
    th = task["theorem"]
    M, g, plan, tol = pf.domain, pf.g, pf.plan, pf.tolerances
    fn = (lambda: pf.function(task.get("function"))) if th not in ("t43a", "t43c") else None
    fns = [pf.functions[n] for n in task.get("functions", [])]
    nu = float(task.get("nu", 1.0))
    if th == "t41":
        return sets.epigraph_harness(fn(), g, M, plan, tol)
    if th in ("t42", "t49"):
        return algebra.theorem_closure_harness((_outer(task["outer"]), fn()), g, M, plan, tol, th)
    if th == "t43a":
        if len(fns) != 2:
            raise ProblemError("t43a needs exactly two functions")
        return algebra.theorem_closure_harness(tuple(fns), g, M, plan, tol, th)
    if th == "t43b":
        return algebra.theorem_closure_harness((float(task["alpha"]), fn()), g, M, plan, tol, th)
    if th == "t43c":
        return algebra.theorem_closure_harness((task["coeffs"], fns), g, M, plan, tol, th)
    if th == "t44":
        return sets.levelsets_of_x_convex_harness(fn(), g, M, plan, tol, task.get("etas"))
    if th == "t45":
        mode = task.get("mode", "xconvex")
        if mode not in ("xconvex", "strictly_xconvex"):
            raise ProblemError("t45 mode must be 'xconvex' or 'strictly_xconvex'")
        return optimize.local_global_harness(fn(), g, M, plan, nu, mode, tol)
    if th in ("t45_min", "t59"):
        return optimize.minimum_set_x_convex_harness(fn(), g, M, plan, tol, th)
    if th == "t46":
        return sets.quasi_iff_levelsets_harness(fn(), g, M, plan, tol, task.get("etas"))
    if th == "t47":
        return optimize.local_global_harness(fn(), g, M, plan, nu, "quasi_strict", tol)
    if th in ("t48", "t58"):
        return optimize.uniqueness_harness(fn(), g, M, plan, tol, th)
    if th == "t410":
        return optimize.local_global_harness(fn(), g, M, plan, nu, "semistrict", tol)
    Phi = optimize.ObjectiveVector(tuple(fns), g)
    return optimize.efficiency_theorem_harness(Phi, M, plan, nu, th, task.get("mu"), tol)


def run_task(pf: ProblemFile, task: dict) -> tuple[dict, bool]:
    """Run one task; returns ``(result, failed)``."""
    kind = task["type"]
    M, g, plan, tol = pf.domain, pf.g, pf.plan, pf.tolerances
    if kind == "check-set":
        v = check_x_convex_set(M, g, plan)
        return {"task": kind, "verdict": v.to_json()}, _failing(v.status)
    if kind == "classify":
        name = task.get("function") or next(iter(pf.functions))
        c = classify(pf.function(name), g, M, plan, tol)
        failed = any(_failing(c[n].status) for n in CONVEX_CLASSES) or bool(c.issues)
        out = {"task": kind, "function": name, "set": c.set_verdict.to_json()}
        out["verdicts"] = [v.to_json() for v in c.verdicts]
        out["issues"] = list(c.issues)
        return out, failed
    if kind == "levelsets":
        name = task.get("function") or next(iter(pf.functions))
        phi = pf.function(name)
        etas = task.get("etas")
        if etas is None:
            etas = sets.default_eta_grid(phi, M, plan)
        direction = task.get("direction", "lower")
        vs = sets.check_levelsets(phi, g, M, etas, plan, tol, direction)
        failed = any(_failing(v.status) for v in vs)
        return {"task": kind, "function": name, "direction": direction, "verdicts": [v.to_json() for v in vs]}, failed
    if kind == "epigraph":
        name = task.get("function") or next(iter(pf.functions))
        v = sets.check_epigraph_x_convex(pf.function(name), g, M, plan, tol)
        return {"task": kind, "function": name, "verdict": v.to_json()}, _failing(v.status)
    if kind == "optimize":
        name = task.get("function") or next(iter(pf.functions))
        phi = pf.function(name)
        point, value = optimize.global_min_search(phi, M, plan)
        out = {"task": kind, "function": name, "argmin": point.tolist(), "min_value": value}
        if "nu" in task:
            nu = float(task["nu"])
            locs = optimize.local_minima(phi, M, plan, nu, bool(task.get("strict", False)))
            out["nu"] = nu
            out["local_minima"] = locs.tolist()
            out["ball_condition"] = optimize.check_ball_condition(M, g, plan, nu).to_json()
        return out, False
    if kind == "pareto":
        fns = tuple(pf.functions[n] for n in task["functions"])
        nu = float(task.get("nu", 0.1))
        scan = optimize.efficiency_scan(optimize.ObjectiveVector(fns, g), M, plan, nu)
        return {"task": kind, "functions": list(task["functions"]), "nu": nu, "points": [v.to_json() for v in scan]}, False
    report = _run_harness(pf, task)
    return {"task": kind, "theorem": task["theorem"], "report": report.to_json()}, report.red_event


def run_problem(pf: ProblemFile) -> tuple[dict, int]:
    """Run every task in order.  Exit code 1 if anything failed, else 0."""
    results, failed = [], False
    for task in pf.tasks:
        try:
            res, bad = run_task(pf, task)
        except (PreconditionError, KeyError) as exc:
            raise ProblemError(f"task {task.get('type')}: {exc}") from exc
        results.append(res)
        failed |= bad
    code = 1 if failed else 0
    report = {
        "id": pf.id,
        "problem": pf.raw,
        "plan": pf.plan.to_json(),
        "tolerances": pf.tolerances.to_json(),
        "results": results,
        "exit_code": code,
    }
    return report, code

