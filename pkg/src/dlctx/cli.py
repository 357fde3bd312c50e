"""`dlctx` command-line driver.

A thin client over the analysis service layer: it assembles the same
request model the HTTP API accepts, runs it in-process by default, or sends
it to a running `dlctx-serve` instance with ``--server``.

Exit codes: 0 clean, 1 usage/parse/analysis error, 10 deadlock found under
``--explore``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from pydantic import ValidationError

from .errors import DlctxError
from .models import AnalyzeOptions, AnalyzeRequest, Report
from .pipeline import render_text, run_pipeline

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DEADLOCK = 10


def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dlctx",
        description="Infer abstract deadlock cycles, deadlock-interfering tasks and "
        "initial contexts for a .act program, and explore contexts for deadlocks.",
    )
    ap.add_argument("input", help="path to a .act source file")
    ap.add_argument("--cycles", action="store_true", help="report abstract deadlock cycles")
    ap.add_argument(
        "--initial-tasks", action="store_true", help="report deadlock-interfering tasks"
    )
    ap.add_argument("--contexts", action="store_true", help="report generated initial contexts")
    ap.add_argument(
        "--explore", action="store_true", help="exhaustively explore the generated contexts"
    )
    ap.add_argument("--format", choices=("text", "json"), default="text")
    ap.add_argument(
        "--card",
        action="append",
        default=[],
        metavar="Class.method=min:max",
        help="cardinality override (repeatable)",
    )
    ap.add_argument("--max-states", type=int, default=10_000)
    ap.add_argument("--max-depth", type=int, default=100_000)
    ap.add_argument("--expand-wiring", action="store_true",
                    help="enumerate reference-wiring variants as distinct contexts")
    ap.add_argument("--partial", action="store_true",
                    help="also report partial deadlocks (blocked waits-for cycles)")
    ap.add_argument("--dump-facts", action="store_true",
                    help="dump per-task (pp, fields-so-far, await-before) facts as TSV")
    ap.add_argument("--trace-worklist", action="store_true",
                    help="dump each step of the interfering-tasks worklist")
    ap.add_argument("--no-timing", action="store_true", help="omit the timing section")
    ap.add_argument("--server", metavar="URL", default=None,
                    help="send the request to a running dlctx-serve instance")
    return ap


def parse_card(text: str) -> tuple[str, tuple[int, int]]:
    try:
        name, bounds = text.split("=", 1)
        lo, hi = bounds.split(":", 1)
        return name, (int(lo), int(hi))
    except ValueError:
        raise DlctxError(
            f"malformed --card {text!r}, expected Class.method=min:max"
        ) from None


def build_request(args: argparse.Namespace, source: str) -> AnalyzeRequest:
    stages = [
        stage
        for stage, chosen in (
            ("cycles", args.cycles),
            ("initial-tasks", args.initial_tasks),
            ("contexts", args.contexts),
            ("explore", args.explore),
        )
        if chosen
    ]
    if not stages and not args.dump_facts and not args.trace_worklist:
        raise DlctxError(
            "select at least one stage "
            "(--cycles, --initial-tasks, --contexts, --explore, --dump-facts)"
        )
    options = AnalyzeOptions(
        cardinalities=dict(parse_card(c) for c in args.card),
        expand_wiring=args.expand_wiring,
        partial=args.partial,
        max_states=args.max_states,
        max_depth=args.max_depth,
        dump_facts=args.dump_facts,
        trace_worklist=args.trace_worklist,
        include_timing=not args.no_timing,
    )
    return AnalyzeRequest(source=source, stages=stages, options=options)


def run_remote(server: str, request: AnalyzeRequest) -> Report:
    import httpx

    response = httpx.post(
        server.rstrip("/") + "/analyze", json=request.model_dump(), timeout=300.0
    )
    if response.status_code != 200:
        raise DlctxError(f"server error {response.status_code}: {response.text}")
    return Report.model_validate(response.json())


def main(argv: list[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        source = Path(args.input).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    try:
        request = build_request(args, source)
        if args.server:
            report = run_remote(args.server, request)
        else:
            report = run_pipeline(request, input_name=args.input)
    except (DlctxError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.format == "json":
        print(report.to_json())
    else:
        print(render_text(report, request.stages), end="")
    if report.explore is not None and report.explore.any_deadlock:
        return EXIT_DEADLOCK
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
