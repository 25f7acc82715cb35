"""``cncc`` command: parse, check, run and explore CHAM programs, or run the pipeline.

Exit codes: 0 ok, 1 parse error, 2 I/O error, 3 closure violation,
4 run truncated, 5 exploration bound exceeded, 6 stage failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .dataset import gen_synthetic_dataset, load_dataset
from .engine import check_confluence, check_termination, explore, run
from .errors import BoundExceeded, ParseError, StageFailure
from .model import builtin_cncc_learning, dataflow_closure_check
from .parser import parse_program, render_program
from .pipeline import PipelineConfig, run_pipeline

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_IO = 2
EXIT_CLOSURE = 3
EXIT_TRUNCATED = 4
EXIT_BOUND = 5
EXIT_STAGE = 6


class _IoFailure(Exception):
    pass


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _non_negative_float(text: str) -> float:
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cncc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--input", help="program file (defaults to the builtin learning program)")
        p.add_argument("--output", help="write the result here instead of standard output")
        return p

    add("parse", "print the canonical rendering of a program")
    add("check", "dataflow closure report")
    p = add("run", "execute a program and emit its trace")
    p.add_argument("--scheduler", choices=("lex", "fifo", "random"), default="lex")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", type=_positive_int, default=1000)
    p = add("explore", "exhaustive state exploration with confluence and termination verdicts")
    p.add_argument("--bound", type=_positive_int, default=64)
    p = add("pipeline", "synthetic numeric run (--input names an exported dataset directory)")
    p.add_argument("--scheduler", choices=("lex", "fifo", "random"), default="lex")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iterations", type=_positive_int, default=5)
    p.add_argument("--samples", type=_positive_int, default=200)
    p.add_argument("--classes", type=_positive_int, default=2)
    p.add_argument("--noise", type=_non_negative_float, default=0.1)
    return parser


def _load_program(path: str | None):
    if path is None:
        return builtin_cncc_learning()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _IoFailure(f"cannot read {path}: {exc.strerror or exc}") from exc
    return parse_program(text)


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise _IoFailure(f"cannot write {path}: {exc.strerror or exc}") from exc


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_parse(args) -> int:
    _emit(render_program(_load_program(args.input)), args.output)
    return EXIT_OK


def cmd_check(args) -> int:
    report = dataflow_closure_check(_load_program(args.input))
    _emit(_dumps(report.to_json()), args.output)
    return EXIT_OK if report.ok else EXIT_CLOSURE


def cmd_run(args) -> int:
    program = _load_program(args.input)
    trace = run(program, scheduler=args.scheduler, max_steps=args.max_steps, seed=args.seed,
                name=Path(args.input).stem if args.input else "cncc_learning")
    _emit(trace.dumps(), args.output)
    return EXIT_TRUNCATED if trace.truncated else EXIT_OK


def cmd_explore(args) -> int:
    program = _load_program(args.input)
    status = EXIT_OK
    try:
        graph = explore(program, state_bound=args.bound)
    except BoundExceeded as exc:
        graph, status = exc.graph, EXIT_BOUND
    dot = graph.to_dot()
    result = {
        "bound": args.bound,
        "complete": graph.complete,
        "states": len(graph.states),
        "edges": len(graph.edges),
        "terminals": graph.terminals,
        "confluence": check_confluence(graph).to_json(),
        "termination": check_termination(graph).to_json(),
        "dot": dot,
    }
    _emit(_dumps(result), args.output)
    if args.output is not None:
        _emit(dot, str(Path(args.output).with_suffix(".dot")))
    return status


def cmd_pipeline(args) -> int:
    if args.input is not None:
        try:
            dataset = load_dataset(args.input)
        except OSError as exc:
            raise _IoFailure(f"cannot read dataset {args.input}: {exc.strerror or exc}") from exc
    else:
        dataset = gen_synthetic_dataset(args.seed, args.samples, args.classes, args.noise)
    cfg = PipelineConfig(scheduler=args.scheduler)
    metrics = run_pipeline(dataset, args.iterations, cfg, seed=args.seed)
    _emit(metrics.dumps(), args.output)
    return EXIT_OK


COMMANDS = {
    "parse": cmd_parse,
    "check": cmd_check,
    "run": cmd_run,
    "explore": cmd_explore,
    "pipeline": cmd_pipeline,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"{args.input or '<builtin>'}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except _IoFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except StageFailure as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
