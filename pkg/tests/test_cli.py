import csv
import io
import json
import math
import subprocess
import sys

import pytest

from xconvex.cli import main
from xconvex.corpus import CORPUS, case_by_id, run_case
from xconvex.problem import ProblemError, ProblemFile
from xconvex.report import dumps, format_float, loads

PLAN = {"grid_per_axis": 41, "random_count": 60, "delta_grid": 51}

IDENTITY = {
    "id": "identity",
    "domain": {"dim": 1, "pieces": [[{"lo": 0, "hi": 10}]]},
    "g": ["r - 1"],
    "functions": {"phi": {"expr": "r", "domain": "whole"}},
    "plan": PLAN,
    "tasks": [{"type": "classify"}],
}
FLOOR_NOT_X = {
    "id": "floor",
    "domain": {"dim": 1, "pieces": [[{"lo": "-inf", "hi": -0.02}], [{"lo": -0.01, "hi": 0}]]},
    "g": ["r - 0.02"],
    "functions": {"phi": {"expr": "alpha + floor(r)", "params": {"alpha": 1}}},
    "plan": PLAN,
    "tolerances": {"eps_val_eq": 0},
    "tasks": [
        {"type": "classify"},
        {"type": "levelsets", "etas": [-1, 0, 1]},
        {"type": "epigraph"},
        {"type": "optimize", "nu": 0.5},
    ],
}


def write(tmp_path, obj, name="p.json"):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_identity_classify_exit_zero(tmp_path, capsys):
    code, out, _ = run(capsys, "run", write(tmp_path, IDENTITY))
    assert code == 0
    rep = loads(out)
    verdicts = {v["class"]: v["status"] for v in rep["results"][0]["verdicts"]}
    assert verdicts["strictly_x_convex"] == "no_counterexample_found"
    assert rep["exit_code"] == 0


def test_floor_not_x_exit_one(tmp_path, capsys):
    code, out, _ = run(capsys, "run", write(tmp_path, FLOOR_NOT_X))
    assert code == 1
    verdicts = {v["class"]: v["status"] for v in loads(out)["results"][0]["verdicts"]}
    assert verdicts["x_convex"] == "falsified"
    assert verdicts["quasi_x_convex"] == "no_counterexample_found"


@pytest.mark.parametrize(
    "problem, fragment",
    [
        ("{not json", "invalid JSON"),
        (dict(IDENTITY, functions={"phi": "r +* 2"}), "unexpected"),
        (dict(IDENTITY, tasks=[]), "at least one task"),
        (dict(IDENTITY, tasks=[{"type": "fly"}]), "unknown type"),
        (dict(IDENTITY, g=["x1", "x2"]), "components"),
        (dict(IDENTITY, extra=1), "unknown top-level"),
        (dict(IDENTITY, tasks=[{"type": "harness", "theorem": "t42"}]), "outer"),
        (dict(IDENTITY, tasks=[{"type": "optimize", "nu": -1}]), "positive"),
        (dict(IDENTITY, tasks=[{"type": "classify", "function": "psi"}]), "unknown function"),
    ],
)
def test_input_errors_exit_two(tmp_path, capsys, problem, fragment):
    code, out, err = run(capsys, "run", write(tmp_path, problem))
    assert code == 2 and out == ""
    assert err.startswith("error:") and fragment in err


def test_missing_file_exit_two(tmp_path, capsys):
    code, _, err = run(capsys, "run", str(tmp_path / "nope.json"))
    assert code == 2 and "cannot read" in err


def test_csv_classify_has_ten_rows(tmp_path, capsys):
    code, out, _ = run(capsys, "run", write(tmp_path, IDENTITY), "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 10
    assert {r["name"] for r in rows} >= {"x_convex", "strictly_x_concave", "semistrictly_quasi_x_concave"}


def test_csv_other_tasks(tmp_path, capsys):
    _, out, _ = run(capsys, "run", write(tmp_path, FLOOR_NOT_X), "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    kinds = [r["kind"] for r in rows]
    assert kinds.count("classify") == 10 and kinds.count("levelsets") == 3
    assert kinds.count("epigraph") == 1 and kinds.count("optimize") == 1


def test_out_and_seed(tmp_path, capsys):
    p = write(tmp_path, IDENTITY)
    out_a, out_b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, "run", p, "--seed", "7", "--out", str(out_a))[1] == ""
    run(capsys, "run", p, "--seed", "7", "--out", str(out_b))
    rep = loads(out_a.read_text())
    assert rep["plan"]["seed"] == 7 and rep["problem"]["plan"]["seed"] == 7
    assert out_a.read_bytes() == out_b.read_bytes()
    run(capsys, "run", p, "--seed", "8", "--out", str(out_b))
    assert loads(out_b.read_text())["plan"]["seed"] == 8


def test_verify_witness_round_trip(tmp_path, capsys):
    report = tmp_path / "r.json"
    run(capsys, "run", write(tmp_path, FLOOR_NOT_X), "--out", str(report))
    code, out, _ = run(capsys, "verify-witness", str(report))
    assert code == 0
    lines = out.splitlines()
    assert any(line.startswith("OK") and "x_convex" in line for line in lines)
    assert not any(line.startswith("FAIL") for line in lines)


def test_verify_witness_detects_tampering(tmp_path, capsys):
    report = tmp_path / "r.json"
    run(capsys, "run", write(tmp_path, FLOOR_NOT_X), "--out", str(report))
    rep = loads(report.read_text())
    v = next(v for v in rep["results"][0]["verdicts"] if v["class"] == "x_convex")
    v["witness"]["delta"] = v["witness"]["delta"] / 2 + 0.01
    report.write_text(dumps(rep))
    code, out, _ = run(capsys, "verify-witness", str(report))
    assert code == 1 and "FAIL" in out


def test_verify_witness_bad_inputs(tmp_path, capsys):
    assert run(capsys, "verify-witness", write(tmp_path, "[", "bad.json"))[0] == 2
    report = tmp_path / "r.json"
    run(capsys, "run", write(tmp_path, IDENTITY), "--out", str(report))
    assert run(capsys, "verify-witness", str(report), "--case", "other")[0] == 2


def test_corpus_case_rows_and_witnesses():
    case = case_by_id("floor_quasi_not_x")
    result = run_case(case)
    rows = {(r["kind"], r["claim"]): r for r in result["rows"]}
    assert all(r["agreement"] in ("AGREE", "DISAGREE") for r in result["rows"])
    recheck = [r for r in result["rows"] if r["kind"] == "witness-recheck"]
    assert len(recheck) == 1 and recheck[0]["agreement"] == "DISAGREE"
    assert any(k == "class" and "x_convex" in str(c) for k, c in rows)
    from xconvex.verify import verify_report

    entries = verify_report(result)
    assert entries and all(e["ok"] is not False for e in entries)


def test_corpus_ids_unique():
    ids = [c.id for c in CORPUS]
    assert len(ids) == len(set(ids))
    for c in CORPUS:
        ProblemFile.from_json(c.problem)


def test_problem_file_validation_errors():
    with pytest.raises(ProblemError):
        ProblemFile.from_json([])
    with pytest.raises(ProblemError):
        ProblemFile.from_json({"tasks": [{"type": "classify"}]})


def test_format_float():
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(1.0) == "1.0"
    assert format_float(1e300) == "1.0000000000000001e+300"
    assert format_float(math.inf) == '"inf"'
    assert format_float(-math.inf) == '"-inf"'
    assert format_float(math.nan) == '"nan"'
    assert float(format_float(2 / 3)) == 2 / 3


def test_console_script_exit_code(tmp_path):
    p = write(tmp_path, dict(IDENTITY, functions={"phi": "r +"}))
    proc = subprocess.run([sys.executable, "-m", "xconvex.cli", "run", p], capture_output=True, text=True)
    assert proc.returncode == 2 and "error:" in proc.stderr
