"""Built-in worked examples with their published claims, run as data.

Each claim is compared with the tool's verdict and becomes an AGREE or
DISAGREE row; nothing here asserts that a claim is right.
"""

from __future__ import annotations

from dataclasses import dataclass

from .checker import Status, recheck_triple
from .problem import ProblemFile, run_problem

__all__ = ["CorpusCase", "CORPUS", "run_case", "run_corpus", "case_by_id"]

INF = "inf"


def _iv(lo, hi, lo_closed=None, hi_closed=None) -> dict:
    out = {"lo": lo, "hi": hi}
    if lo_closed is not None:
        out["lo_closed"] = lo_closed
    if hi_closed is not None:
        out["hi_closed"] = hi_closed
    return out


def _union(*ivs) -> dict:
    return {"dim": 1, "pieces": [[iv] for iv in ivs]}


M_1_2_3 = _union(_iv(1, 2), _iv(3, INF))
M_FLOOR = _union(_iv("-inf", -3), _iv(-2, -1))
M_FLOOR_NOT_X = _union(_iv("-inf", -1 / 50), _iv(-1 / 100, 0))
M_PW32 = _union(_iv(-1, -0.5), _iv(0, INF))
M_PW21 = _union(_iv(0, 2), _iv(5, INF))
M_0_10 = _union(_iv(0, 10))
WHOLE = _union(_iv("-inf", INF))

IDENTITY_WHOLE = {"expr": "r", "domain": "whole"}
FLOOR = {"expr": "alpha + floor(r)", "params": {"alpha": 1.0}}
PW32 = "piecewise((r == 0, 3), 2)"
PW21 = "piecewise((r == 0, 2), 1)"
EXP_OUTER = {"expr": "exp(x1)", "monotone_nondecreasing": True, "convex": True}


@dataclass(frozen=True)
class CorpusCase:
    """One example: a problem plus the claims made about it.

    ``claims`` entries are ``(task index, target, expected)`` where target is
    ``"set"``, a class name, or ``"red_event"``; expected is a status value,
    or a bool for red events.
    """

    id: str
    description: str
    problem: dict
    claims: tuple
    witness_rechecks: tuple = ()  # (class, r, t, delta, claimed "violates")
    notes: tuple = ()


EXACT_VALUES = {"eps_val_eq": 0.0}  # integer-valued functions: compare values exactly
FLOOR_NOTE = "the bracket in the source is read as floor"


def _problem(id_, domain, g, functions, tasks, plan=None, tolerances=None) -> dict:
    out = {"id": id_, "domain": domain, "functions": functions, "tasks": tasks}
    if g is not None:
        out["g"] = g
    if plan:
        out["plan"] = plan
    if tolerances:
        out["tolerances"] = tolerances
    return out


NCF = Status.NO_COUNTEREXAMPLE.value
FALSE = Status.FALSIFIED.value
ESC = Status.DOMAIN_ESCAPE.value


def _examples() -> list[CorpusCase]:
    cases = [
        CorpusCase(
            "set_1_2_3_inf",
            "[1,2] u [3,inf) with g(t) = t + 3 is X-convex",
            _problem("set_1_2_3_inf", M_1_2_3, ["r + 3"], {}, [{"type": "check-set"}]),
            ((0, "set", NCF),),
        ),
        CorpusCase(
            "set_1_2_3_inf_identity",
            "[1,2] u [3,inf) is not convex (g = identity)",
            _problem("set_1_2_3_inf_identity", M_1_2_3, None, {}, [{"type": "check-set"}]),
            ((0, "set", ESC),),
        ),
        CorpusCase(
            "const_c",
            "a constant on [1,2] u [3,inf) is X-convex for g(t) = t + 3",
            _problem(
                "const_c",
                M_1_2_3,
                ["r + 3"],
                {"phi": {"expr": "c", "params": {"c": 2.0}}},
                [{"type": "classify", "function": "phi"}],
            ),
            ((0, "x_convex", NCF),),
        ),
        CorpusCase(
            "identity_shift",
            "the identity on R is strictly X-convex for g(t) = t - alpha",
            _problem(
                "identity_shift",
                WHOLE,
                ["r - alpha"],
                {"phi": "r"},
                [{"type": "classify", "function": "phi"}],
            )
            | {"params": {"alpha": 1.0}},
            ((0, "strictly_x_convex", NCF),),
        ),
        CorpusCase(
            "floor_quasi",
            "alpha + floor(r) on (-inf,-3] u [-2,-1] is quasi-X-convex for g(t) = t - 3",
            _problem("floor_quasi", M_FLOOR, ["r - 3"], {"phi": FLOOR}, [{"type": "classify", "function": "phi"}], tolerances=EXACT_VALUES),
            ((0, "quasi_x_convex", NCF),),
            notes=(FLOOR_NOTE,),
        ),
        CorpusCase(
            "floor_quasi_not_x",
            "alpha + floor(r) on (-inf,-1/50] u [-1/100,0] is quasi-X-convex but not X-convex for g(t) = t - 1/50",
            _problem(
                "floor_quasi_not_x",
                M_FLOOR_NOT_X,
                ["r - 0.02"],
                {"phi": FLOOR},
                [{"type": "classify", "function": "phi"}],
                tolerances=EXACT_VALUES,
            ),
            ((0, "quasi_x_convex", NCF), (0, "x_convex", FALSE)),
            (("x_convex", -1.5, -2.5, 0.502, True),),
            (FLOOR_NOTE,),
        ),
        CorpusCase(
            "piecewise_3_2",
            "3 at 0 and 2 elsewhere on [-1,-1/2] u [0,inf), g(t) = t + 1: semi-strictly quasi only",
            _problem("piecewise_3_2", M_PW32, ["r + 1"], {"phi": PW32}, [{"type": "classify", "function": "phi"}], tolerances=EXACT_VALUES),
            (
                (0, "semistrictly_quasi_x_convex", NCF),
                (0, "strictly_quasi_x_convex", FALSE),
                (0, "quasi_x_convex", FALSE),
            ),
        ),
        CorpusCase(
            "piecewise_2_1",
            "2 at 0 and 1 elsewhere on [0,2] u [5,inf), g(t) = t + 5: semi-strictly quasi, not strictly quasi, not X-convex",
            _problem("piecewise_2_1", M_PW21, ["r + 5"], {"phi": PW21}, [{"type": "classify", "function": "phi"}], tolerances=EXACT_VALUES),
            (
                (0, "semistrictly_quasi_x_convex", NCF),
                (0, "strictly_quasi_x_convex", FALSE),
                (0, "x_convex", FALSE),
            ),
        ),
    ]
    return cases


def _harness_case(id_, description, domain, g, functions, task, plan=None, tolerances=None, red=False):
    return CorpusCase(id_, description, _problem(id_, domain, g, functions, [task], plan, tolerances), ((0, "red_event", red),))


def _harness_cases() -> list[CorpusCase]:
    ident = {"phi": IDENTITY_WHOLE}
    const = {"phi": {"expr": "c", "params": {"c": 2.0}}}
    square_shift = {"phi": "(r - 1)^2"}
    pareto_lin = {"f1": "r", "f2": "1 - r"}
    pareto_sq = {"f1": "r^2", "f2": "(r - 1)^2"}
    sq_domain = _union(_iv(-1, 2))
    sq_plan = {"breakpoints": [[0, 0.5, 1]]}
    unit = _union(_iv(0, 1))
    return [
        _harness_case("h_t41_const", "epigraph of a constant", M_1_2_3, ["r + 3"], const, {"type": "harness", "theorem": "t41"}),
        _harness_case("h_t41_identity", "epigraph of the identity", M_0_10, ["r - 1"], ident, {"type": "harness", "theorem": "t41"}),
        _harness_case(
            "h_t42_exp_identity",
            "exp composed with the identity",
            M_0_10,
            ["r - 1"],
            ident,
            {"type": "harness", "theorem": "t42", "function": "phi", "outer": EXP_OUTER},
        ),
        _harness_case(
            "h_t43a_const",
            "sum of two constants",
            M_1_2_3,
            ["r + 3"],
            {"a": {"expr": "c", "params": {"c": 2.0}}, "b": {"expr": "c", "params": {"c": 2.0}}},
            {"type": "harness", "theorem": "t43a", "functions": ["a", "b"]},
        ),
        _harness_case(
            "h_t43b_scale",
            "2.5 times the identity",
            M_0_10,
            ["r - 1"],
            ident,
            {"type": "harness", "theorem": "t43b", "function": "phi", "alpha": 2.5},
        ),
        _harness_case(
            "h_t43c_conic",
            "conic combination of the identity and a constant",
            M_0_10,
            ["r - 1"],
            {"a": IDENTITY_WHOLE, "b": {"expr": "3", "domain": "whole"}},
            {"type": "harness", "theorem": "t43c", "functions": ["a", "b"], "coeffs": [2.0, 3.0]},
        ),
        _harness_case("h_t44_identity", "level sets of the identity", M_0_10, ["r - 1"], ident, {"type": "harness", "theorem": "t44"}),
        _harness_case(
            "h_t45_identity",
            "local minima of the identity under the ball condition",
            M_0_10,
            ["r - 1"],
            ident,
            {"type": "harness", "theorem": "t45", "nu": 20, "mode": "strictly_xconvex"},
        ),
        _harness_case("h_t45_min_const", "minimizer set of a constant", M_1_2_3, ["r + 3"], const, {"type": "harness", "theorem": "t45_min"}),
        _harness_case(
            "h_t45_min_identity",
            "minimizer set of the identity: the combination of 0 with itself is -1, outside [0,10]",
            M_0_10,
            ["r - 1"],
            ident,
            {"type": "harness", "theorem": "t45_min"},
            red=True,
        ),
        _harness_case("h_t46_floor", "level sets of the floor example", M_FLOOR, ["r - 3"], {"phi": FLOOR}, {"type": "harness", "theorem": "t46"}),
        _harness_case("h_t46_piecewise", "level sets of the 3/2 example", M_PW32, ["r + 1"], {"phi": PW32}, {"type": "harness", "theorem": "t46"}),
        _harness_case(
            "h_t47_square",
            "strict local minimum of (r - 1)^2",
            _union(_iv(0, 3)),
            None,
            square_shift,
            {"type": "harness", "theorem": "t47", "nu": 4},
            plan={"breakpoints": [[1]]},
        ),
        _harness_case("h_t48_identity", "unique minimizer of the identity", M_0_10, ["r - 1"], ident, {"type": "harness", "theorem": "t48"}),
        _harness_case(
            "h_t58_square",
            "unique minimizer of (r - 1)^2",
            _union(_iv(0, 3)),
            None,
            square_shift,
            {"type": "harness", "theorem": "t58"},
            plan={"breakpoints": [[1]]},
        ),
        _harness_case(
            "h_t49_exp_floor",
            "exp composed with the floor example",
            M_FLOOR,
            ["r - 3"],
            {"phi": FLOOR},
            {"type": "harness", "theorem": "t49", "function": "phi", "outer": EXP_OUTER},
        ),
        _harness_case(
            "h_t410_piecewise",
            "local minima of the 2/1 example",
            M_PW21,
            ["r + 5"],
            {"phi": PW21},
            {"type": "harness", "theorem": "t410", "nu": 10000},
        ),
        _harness_case(
            "h_t53_linear",
            "local versus global efficiency for (r, 1 - r)",
            unit,
            None,
            pareto_lin,
            {"type": "harness", "theorem": "t53", "functions": ["f1", "f2"], "nu": 0.1},
        ),
        _harness_case(
            "h_t54_squares",
            "scalarized minimum of (r^2, (r - 1)^2) with weights (1/2, 1/2)",
            sq_domain,
            None,
            pareto_sq,
            {"type": "harness", "theorem": "t54", "functions": ["f1", "f2"], "nu": 0.1, "mu": [0.5, 0.5]},
            plan=sq_plan,
        ),
        _harness_case(
            "h_t55_squares",
            "local versus global efficiency for (r^2, (r - 1)^2)",
            sq_domain,
            None,
            pareto_sq,
            {"type": "harness", "theorem": "t55", "functions": ["f1", "f2"], "nu": 0.1},
            plan=sq_plan,
        ),
        _harness_case(
            "h_t56_linear",
            "local versus global weak efficiency for (r, 1 - r)",
            unit,
            None,
            pareto_lin,
            {"type": "harness", "theorem": "t56", "functions": ["f1", "f2"], "nu": 0.1},
        ),
        _harness_case(
            "h_t57_linear",
            "scalarized minimum of (r, 1 - r) with weights (1, 0)",
            unit,
            None,
            pareto_lin,
            {"type": "harness", "theorem": "t57", "functions": ["f1", "f2"], "nu": 0.1, "mu": [1.0, 0.0]},
        ),
        _harness_case("h_t59_floor", "minimizer set of the floor example", M_FLOOR, ["r - 3"], {"phi": FLOOR}, {"type": "harness", "theorem": "t59"}),
    ]


CORPUS = tuple(_examples() + _harness_cases())


def case_by_id(case_id: str) -> CorpusCase:
    for case in CORPUS:
        if case.id == case_id:
            return case
    raise KeyError(case_id)


def _observed(result: dict, target: str):
    if target == "set":
        v = result["set"] if result["task"] == "classify" else result["verdict"]
        return v["status"], v.get("witness")
    if target == "red_event":
        rep = result["report"]
        if rep["skipped"]:
            return "skipped", None
        return rep["red_event"], (rep["red_events"][0] if rep["red_events"] else None)
    for v in result["verdicts"]:
        if v["class"] == target:
            return v["status"], v.get("witness")
    raise KeyError(target)


def _recheck_row(case: CorpusCase, pf: ProblemFile, entry) -> dict:
    cls, r, t, delta, claimed = entry
    phi = next(iter(pf.functions.values()))
    combo, lhs, rhs = recheck_triple(phi, pf.g, cls, [r], [t], delta)
    gap = lhs - rhs
    violates = gap > pf.tolerances.eps_ineq
    return {
        "case": case.id,
        "kind": "witness-recheck",
        "claim": f"{cls} violated at r={r!r}, t={t!r}, delta={delta!r}",
        "expected": "violates" if claimed else "does not violate",
        "observed": "violates" if violates else "witness does not violate",
        "agreement": "AGREE" if violates == claimed else "DISAGREE",
        "witness": {"r": [r], "t": [t], "delta": delta, "combo": combo.tolist(), "lhs": lhs, "rhs": rhs, "gap": gap},
    }


def run_case(case: CorpusCase) -> dict:
    pf = ProblemFile.from_json(case.problem)
    report, _ = run_problem(pf)
    rows = []
    for task_no, target, expected in case.claims:
        observed, witness = _observed(report["results"][task_no], target)
        kind = "harness" if target == "red_event" else ("set" if target == "set" else "class")
        rows.append(
            {
                "case": case.id,
                "kind": kind,
                "claim": target,
                "expected": expected,
                "observed": observed,
                "agreement": "AGREE" if observed == expected else "DISAGREE",
                "witness": witness,
            }
        )
    for entry in case.witness_rechecks:
        rows.append(_recheck_row(case, pf, entry))
    return {
        "id": case.id,
        "description": case.description,
        "notes": list(case.notes),
        "problem": case.problem,
        "results": report["results"],
        "rows": rows,
    }


def run_corpus(cases=CORPUS) -> dict:
    out = [run_case(c) for c in cases]
    rows = [r for c in out for r in c["rows"]]
    return {
        "cases": out,
        "summary": {
            "rows": len(rows),
            "agree": sum(r["agreement"] == "AGREE" for r in rows),
            "disagree": sum(r["agreement"] == "DISAGREE" for r in rows),
        },
    }
