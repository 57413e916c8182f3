"""Deterministic JSON and CSV output.

Floats are printed with 17 significant digits so every value round-trips
exactly; infinities and NaN become the strings ``"inf"``, ``"-inf"`` and
``"nan"``.
"""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

__all__ = ["format_float", "dumps", "loads", "to_csv_rows", "dumps_csv", "CSV_COLUMNS"]


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    text = format(x, ".17g")
    if not any(c in text for c in ".en"):
        text += ".0"
    return text


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "to_json"):
        return obj.to_json()
    if isinstance(obj, tuple):
        return list(obj)
    return obj


def _emit(obj, indent: int, level: int, out: list):
    obj = _plain(obj)
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(format_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.append(f"{pad}{json.dumps(str(k))}: ")
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        if all(isinstance(_plain(v), (int, float, bool, str)) or v is None for v in obj):
            parts = []
            for v in obj:
                sub: list = []
                _emit(v, indent, level + 1, sub)
                parts.append("".join(sub))
            out.append("[" + ", ".join(parts) + "]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(pad)
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    out: list[str] = []
    _emit(obj, indent, 0, out)
    return "".join(out) + "\n"


def loads(text: str):
    return json.loads(text)


CSV_COLUMNS = (
    "task",
    "kind",
    "name",
    "status",
    "max_gap",
    "eta",
    "r",
    "t",
    "delta",
    "combo",
    "lhs",
    "rhs",
    "gap",
    "witness_kind",
)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format_float(v).strip('"')
    if isinstance(v, (list, tuple)):
        return " ".join(_cell(x) for x in v)
    return str(v)


def _verdict_row(task_no: int, kind: str, v: dict) -> dict:
    w = v.get("witness") or {}
    return {
        "task": task_no,
        "kind": kind,
        "name": v.get("class", ""),
        "status": v.get("status", ""),
        "max_gap": v.get("max_gap"),
        "eta": v.get("eta"),
        "r": w.get("r"),
        "t": w.get("t"),
        "delta": w.get("delta"),
        "combo": w.get("combo"),
        "lhs": w.get("lhs"),
        "rhs": w.get("rhs"),
        "gap": w.get("gap"),
        "witness_kind": w.get("kind"),
    }


def to_csv_rows(report: dict) -> list[dict]:
    """One row per verdict (classify gives ten), per level set, per harness or per point."""
    rows = []
    for i, res in enumerate(report["results"]):
        kind = res["task"]
        if kind == "classify":
            rows += [_verdict_row(i, kind, v) for v in res["verdicts"]]
        elif kind in ("check-set", "epigraph"):
            rows.append(_verdict_row(i, kind, res["verdict"]))
        elif kind == "levelsets":
            rows += [_verdict_row(i, kind, v) for v in res["verdicts"]]
        elif kind == "harness":
            h = res["report"]
            status = "skipped" if h["skipped"] else ("red_event" if h["red_event"] else "pass")
            rows.append({"task": i, "kind": kind, "name": h["theorem"], "status": status})
        elif kind == "optimize":
            rows.append(
                {"task": i, "kind": kind, "name": "global_min", "status": "", "r": res["argmin"], "lhs": res["min_value"]}
            )
        elif kind == "pareto":
            for p in res["points"]:
                flag = "efficient" if p["global_efficient"] else ("weakly_efficient" if p["global_weakly"] else "dominated")
                rows.append({"task": i, "kind": kind, "name": "point", "status": flag, "r": p["r"], "combo": p["phi"]})
    return rows


def dumps_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in to_csv_rows(report):
        writer.writerow({k: _cell(row.get(k)) for k in CSV_COLUMNS})
    return buf.getvalue()
