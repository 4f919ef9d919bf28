"""Command line: ``run``, ``validate`` and ``metrics``.

Exit codes: 0 success, 1 usage or validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .keyexpr import KeyExprError
from .metrics import Flow, MetricsError, summarize, summary_json, trace_flows
from .runner import run_scenario
from .scenario import ScenarioError, load_scenario
from .trace import TraceError, read_trace

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2

log = logging.getLogger("fanetsim")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit 2, which we reserve for I/O
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _setup_logging() -> None:
    level = {"off": None, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("FANETSIM_LOG", "off").lower())
    if level is None:
        logging.getLogger("fanetsim").addHandler(logging.NullHandler())
        return
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def _window_ms(text: str) -> tuple[int, int]:
    try:
        a, b = text.split(":")
        return int(a) * 1000, int(b) * 1000
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must be t0:t1 in integer ms, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fanetsim", description="FANET named-data network simulator")
    p.add_argument("--version", action="version", version=f"fanetsim {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="simulate a scenario and write trace, summary and figures")
    r.add_argument("--scenario", required=True, type=Path)
    r.add_argument("--seed", type=int, help="override the scenario's master seed")
    r.add_argument("--out", type=Path, default=Path("out"))
    r.add_argument("--no-figures", action="store_true", help="skip matplotlib figures")

    v = sub.add_parser("validate", help="check a scenario file and report every problem")
    v.add_argument("--scenario", required=True, type=Path)

    m = sub.add_parser("metrics", help="recompute the summary from a stored trace")
    m.add_argument("--trace", required=True, type=Path)
    m.add_argument("--flow", action="append", metavar="ORIGIN:SUB:EXPR",
                   help="restrict to this flow (repeatable)")
    m.add_argument("--window", type=_window_ms, metavar="T0:T1",
                   help="throughput window in ms (default: whole run)")
    m.add_argument("--out", type=Path, help="write the summary here instead of stdout")
    return p


def _print_errors(err: ScenarioError) -> None:
    if err.source:
        print(f"{err.source}: {len(err.errors)} error(s)", file=sys.stderr)
    for e in err.errors:
        print(f"  {e}", file=sys.stderr)


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    result = run_scenario(scenario, args.out, seed=args.seed, figures=not args.no_figures)
    print(f"trace:   {result.trace_path}")
    print(f"summary: {result.summary_path}")
    for f in result.figures:
        print(f"figure:  {f}")
    return EXIT_OK


def cmd_validate(args) -> int:
    scenario = load_scenario(args.scenario)
    print(f"{args.scenario}: ok ({len(scenario.nodes)} nodes, {scenario.duration_ms} ms)")
    return EXIT_OK


def cmd_metrics(args) -> int:
    trace = read_trace(args.trace)
    flows = None
    if args.flow:
        known = trace_flows(trace)
        flows = [Flow.parse(f, known) for f in args.flow]
    text = summary_json(summarize(trace, flows=flows, window=args.window))
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "validate": cmd_validate, "metrics": cmd_metrics}[args.command]
    try:
        return handler(args)
    except ScenarioError as exc:
        _print_errors(exc)
        return EXIT_INVALID
    except (MetricsError, KeyExprError, TraceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        name = exc.filename or ""
        print(f"I/O error: {name}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
