"""Command-line front end.

Exit codes: 0 when nothing was falsified, 1 when a check was falsified, a
harness raised a red event or a witness failed re-verification, 2 on input
errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .corpus import run_corpus
from .problem import ProblemError, ProblemFile, run_problem
from .report import dumps, dumps_csv
from .verify import find_case, verify_report

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xconvex", description="Sample-based checks of X-convexity and related classes.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the tasks of a problem file")
    run.add_argument("problem", help="path to a problem JSON file")
    run.add_argument("--format", choices=("json", "csv"), default="json")
    run.add_argument("--out", help="write the report here instead of stdout")
    run.add_argument("--seed", type=int, help="override the sampling seed")

    corpus = sub.add_parser("corpus", help="run the built-in worked examples and print the agreement table")
    corpus.add_argument("--out", help="write the full JSON report here")

    verify = sub.add_parser("verify-witness", help="re-verify the witnesses stored in a report")
    verify.add_argument("report", help="path to a JSON report from 'run' or 'corpus'")
    verify.add_argument("--case", help="case id (required for corpus reports)")
    return parser


def _write(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _cmd_run(args) -> int:
    pf = ProblemFile.load(args.problem)
    if args.seed is not None:
        pf = pf.with_seed(args.seed)
    report, code = run_problem(pf)
    _write(dumps_csv(report) if args.format == "csv" else dumps(report), args.out)
    return code


def _table(report: dict) -> str:
    lines = [f"{'case':24s} {'claim':40s} {'expected':24s} {'observed':26s} result"]
    for case in report["cases"]:
        for row in case["rows"]:
            lines.append(
                f"{row['case']:24s} {str(row['claim'])[:40]:40s} {str(row['expected']):24s} "
                f"{str(row['observed']):26s} {row['agreement']}"
            )
    s = report["summary"]
    lines.append(f"{s['agree']} AGREE, {s['disagree']} DISAGREE of {s['rows']} rows")
    return "\n".join(lines) + "\n"


def _cmd_corpus(args) -> int:
    report = run_corpus()
    if args.out is not None:
        Path(args.out).write_text(dumps(report))
    sys.stdout.write(_table(report))
    return 0


def _cmd_verify(args) -> int:
    try:
        report = json.loads(Path(args.report).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ProblemError(f"cannot read report {args.report}: {exc}") from exc
    try:
        target = find_case(report, args.case)
    except KeyError as exc:
        raise ProblemError(str(exc.args[0])) from exc
    entries = verify_report(target)
    failed = False
    for e in entries:
        tag = "SKIP" if e["ok"] is None else ("OK" if e["ok"] else "FAIL")
        failed |= e["ok"] is False
        eta = f" eta={e['eta']!r}" if "eta" in e else ""
        sys.stdout.write(f"{tag:4s} task {e['task']} {e['name']}{eta} [{e['status']}]: {e['message']}\n")
    sys.stdout.write(f"{len(entries)} witnesses checked\n")
    return 1 if failed else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "corpus": _cmd_corpus, "verify-witness": _cmd_verify}
    try:
        return handlers[args.command](args)
    except ProblemError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
