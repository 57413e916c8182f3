"""Re-verification of witnesses stored in a JSON report."""

from __future__ import annotations

import numpy as np

from .checker import ALL_CLASSES, ClassVerdict, Status, Tolerances, Witness, verify_witness
from .problem import ProblemFile
from .sets import lifted_map

__all__ = ["verify_result", "verify_report", "find_case"]

ULPS = 4
SINGLE_FUNCTION_THEOREMS = ("t41", "t44", "t45", "t45_min", "t46", "t47", "t48", "t58", "t59", "t410")


def _close(a, b, scale) -> bool:
    return bool(np.all(np.abs(np.asarray(a) - np.asarray(b)) <= ULPS * np.finfo(float).eps * np.maximum(scale, 1.0)))


def _verdict(obj: dict) -> ClassVerdict:
    w = Witness.from_json(obj["witness"]) if obj.get("witness") else None
    return ClassVerdict(obj["class"], Status(obj["status"]), w, int(obj.get("triples_checked", 0)))


def _support(phi, M):
    return phi.domain if phi is not None and phi.domain is not None else M


def _check_escape(support, combo, w: Witness) -> tuple[bool, str]:
    dist = float(support.distance_many(np.asarray(combo, dtype=float)[None, :])[0])
    ok = dist > 0.0 and _close(dist, w.gap, abs(w.gap))
    return ok, f"combination {list(combo)} at distance {dist!r} (stored {w.gap!r})"


def _check_levelset(phi, g, M, obj: dict, tol: Tolerances) -> tuple[bool, str]:
    w = Witness.from_json(obj["witness"])
    f = phi.negated() if obj["class"] == "upper_levelset" else phi
    combo = np.asarray(w.delta * (np.array(w.r) - np.array(w.t)), dtype=float) + g.apply(np.array([w.t]))[0]
    if not _close(combo, w.combo, np.abs(combo)):
        return False, f"combination mismatch: stored {list(w.combo)}, recomputed {combo.tolist()}"
    if w.kind == "domain-escape":
        return _check_escape(_support(phi, M), combo, w)
    level = w.rhs
    members = f(w.r) <= level and f(w.t) <= level
    lhs = f(combo)
    gap = lhs - level
    ok = members and gap > tol.eps_ineq and _close(gap, w.gap, max(abs(lhs), abs(level)))
    return ok, f"value {lhs!r} above level {level!r} by {gap!r}; endpoints in level set: {members}"


def _check_epigraph(phi, g, M, obj: dict, tol: Tolerances) -> tuple[bool, str]:
    w = Witness.from_json(obj["witness"])
    f = phi.negated() if obj["class"] == "hypograph" else phi
    if w.kind == "domain-escape":
        combo = w.delta * (np.array(w.r) - np.array(w.t)) + g.apply(np.array([w.t]))[0]
        if not _close(combo, w.combo, np.abs(combo)):
            return False, f"combination mismatch: stored {list(w.combo)}, recomputed {combo.tolist()}"
        return _check_escape(_support(phi, M), combo, w)
    lifted = lifted_map(g)
    r, t = np.array(w.r), np.array(w.t)
    combo = w.delta * (r - t) + lifted.apply(t[None, :])[0]
    if not _close(combo, w.combo, np.abs(combo)):
        return False, f"combination mismatch: stored {list(w.combo)}, recomputed {combo.tolist()}"
    members = f(r[:-1]) <= r[-1] and f(t[:-1]) <= t[-1]
    lhs = f(combo[:-1])
    height = float(combo[-1])
    gap = lhs - height
    ok = members and gap > tol.eps_ineq and _close(gap, w.gap, max(abs(lhs), abs(height)))
    return ok, f"value {lhs!r} above height {height!r} by {gap!r}; endpoints in epigraph: {members}"


def _check(pf: ProblemFile, phi, obj: dict) -> tuple[bool, str]:
    M, g, tol = pf.domain, pf.g, pf.tolerances
    name = obj["class"]
    if name in ("levelset", "upper_levelset"):
        return _check_levelset(phi, g, M, obj, tol)
    if name in ("epigraph", "hypograph"):
        return _check_epigraph(phi, g, M, obj, tol)
    if name == "x_convex_set":
        return verify_witness(None, g, M, _verdict(obj), tol, ULPS)
    return verify_witness(phi, g, M, _verdict(obj), tol, ULPS)


def _entry(task_no, obj, ok, msg) -> dict:
    out = {"task": task_no, "name": obj.get("class", ""), "status": obj.get("status", ""), "ok": ok, "message": msg}
    if obj.get("eta") is not None:
        out["eta"] = obj["eta"]
    return out


def _harness_verdicts(rep: dict):
    for v in list(rep.get("hypotheses", [])) + list(rep.get("conclusions", [])):
        if isinstance(v, dict) and "class" in v:
            yield v


def _check_red_event(pf: ProblemFile, phi, task_no: int, event: dict) -> dict:
    w = event.get("witness") or {}
    obj = {"class": "red_event", "status": "red_event"}
    if phi is None or not {"r", "t", "delta", "combo"} <= set(w):
        return _entry(task_no, obj, None, "red event witness is not a combination triple; not re-verified")
    r, t = np.array(w["r"], dtype=float), np.array(w["t"], dtype=float)
    combo = w["delta"] * (r - t) + pf.g.apply(t[None, :])[0]
    if not _close(combo, w["combo"], np.abs(combo)):
        return _entry(task_no, obj, False, f"combination mismatch: stored {w['combo']}, recomputed {combo.tolist()}")
    inside = pf.domain.contains(combo)
    where = "inside" if inside else "outside"
    return _entry(task_no, obj, True, f"combination {combo.tolist()} recomputed, {where} the domain")


def verify_result(pf: ProblemFile, task_no: int, result: dict) -> list[dict]:
    """Re-verify every stored witness of one task result.

    Harness verdicts about a derived function (compositions, sums, objective
    vectors) are listed with ``ok = None``.
    """
    kind = result["task"]
    task = pf.tasks[task_no]
    out = []
    if kind in ("check-set", "epigraph"):
        verdicts = [result["verdict"]]
    elif kind == "classify":
        verdicts = [result["set"]] + list(result["verdicts"])
    elif kind == "levelsets":
        verdicts = list(result["verdicts"])
    elif kind == "harness":
        verdicts = list(_harness_verdicts(result["report"]))
    else:
        verdicts = []
    phi = None
    if kind in ("classify", "levelsets", "epigraph"):
        phi = pf.function(result.get("function"))
    elif kind == "harness" and task["theorem"] in SINGLE_FUNCTION_THEOREMS:
        phi = pf.function(task.get("function"))
    for v in verdicts:
        if not v.get("witness"):
            continue
        known = v["class"] in ALL_CLASSES + ("x_convex_set", "levelset", "upper_levelset", "epigraph", "hypograph")
        if kind == "harness" and (phi is None or not known):
            out.append(_entry(task_no, v, None, "witness concerns a derived function; not re-verified"))
            continue
        ok, msg = _check(pf, phi, v)
        out.append(_entry(task_no, v, bool(ok), msg))
    if kind == "harness":
        out += [_check_red_event(pf, phi, task_no, e) for e in result["report"]["red_events"]]
    return out


def verify_report(report: dict) -> list[dict]:
    """Re-verify all witnesses in a single-problem report."""
    pf = ProblemFile.from_json(report["problem"])
    out = []
    for i, res in enumerate(report["results"]):
        out += verify_result(pf, i, res)
    return out


def find_case(report: dict, case_id: str | None) -> dict:
    """The single-problem report for ``case_id`` (a corpus case or a run report)."""
    if "cases" in report:
        for case in report["cases"]:
            if case["id"] == case_id:
                return case
        raise KeyError(f"no case {case_id!r} in the report")
    if case_id is not None and report.get("id") != case_id:
        raise KeyError(f"report is for {report.get('id')!r}, not {case_id!r}")
    return report
