"""Command line entry point.

Exit codes: 0 success, 1 semantic failure (conflict, failed assertion,
execution mismatch), 2 unreadable or invalid input, 3 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .analysis import Conflict, annotate_conflict, collect_constraints, format_assignment, solve_lexmin
from .assertions import check_assertions
from .executor import ExecutionError, run_network
from .library import DEFAULT_WEIGHTS
from .model import Assignment, ModelError
from .modelio import ModelDocument, parse_model, parse_weights, serialize_annotated
from .partition import STRATEGIES, communication_policy, merge_none, metrics, monolithic_metrics, partition
from .render import metrics_report, policy_text, render_dot

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2
EXIT_USAGE = 3


class _InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise _InputError(f"{path}: {exc}") from None


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise _InputError(f"{path}: {exc}") from None


def _load(path: str) -> ModelDocument:
    try:
        return parse_model(_read(path))
    except ModelError as exc:
        raise _InputError(f"{path}: {exc}") from None


def _weights(path: str | None) -> dict[str, int]:
    if path is None:
        return dict(DEFAULT_WEIGHTS)
    try:
        return parse_weights(_read(path))
    except ModelError as exc:
        raise _InputError(f"{path}: {exc}") from None


def _solve(doc: ModelDocument, path: str) -> Assignment | Conflict:
    try:
        return solve_lexmin(collect_constraints(doc))
    except ModelError as exc:  # structural errors
        raise _InputError(f"{path}: {exc}") from None


def _report_conflict(doc: ModelDocument, conflict: Conflict, out: str | None) -> int:
    print(conflict.listing(), file=sys.stderr)
    if out is not None:
        _write(out, annotate_conflict(doc, conflict))
    return EXIT_FAIL


def cmd_analyze(args: argparse.Namespace) -> int:
    doc = _load(args.model)
    result = _solve(doc, args.model)
    if isinstance(result, Conflict):
        return _report_conflict(doc, result, args.out)
    _write(args.dump, format_assignment(result))
    if args.out is not None:
        _write(args.out, serialize_annotated(doc, result))
    return EXIT_OK


def _partitioned(args: argparse.Namespace):
    doc = _load(args.model)
    weights = _weights(args.weights)
    result = _solve(doc, args.model)
    if isinstance(result, Conflict):
        return doc, weights, result, None
    max_weight = getattr(args, "merge_max_weight", None)
    domains = partition(doc.network, result, args.strategy, max_weight=max_weight, weights=weights)
    return doc, weights, result, domains


def _metrics_text(doc: ModelDocument, asg: Assignment, domains, weights, strategy: str) -> str:
    net = doc.network
    return metrics_report(
        monolithic_metrics(net, weights),
        metrics(net, merge_none(net, asg), asg, weights),
        metrics(net, domains, asg, weights),
        strategy,
    )


def cmd_partition(args: argparse.Namespace) -> int:
    doc, weights, asg, domains = _partitioned(args)
    if isinstance(asg, Conflict):
        return _report_conflict(doc, asg, args.out)
    if args.out is not None:
        _write(args.out, serialize_annotated(doc, asg, domains))
    policy = policy_text(communication_policy(doc.network, domains, asg))
    if args.policy is not None:
        _write(args.policy, policy)
    sys.stdout.write(_metrics_text(doc, asg, domains, weights, args.strategy))
    return EXIT_OK


def cmd_metrics(args: argparse.Namespace) -> int:
    doc, weights, asg, domains = _partitioned(args)
    if isinstance(asg, Conflict):
        return _report_conflict(doc, asg, None)
    sys.stdout.write(_metrics_text(doc, asg, domains, weights, args.strategy))
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    doc = _load(args.model)
    asg = _solve(doc, args.model)
    if isinstance(asg, Conflict):
        return _report_conflict(doc, asg, None)
    violations = check_assertions(doc, asg)
    for v in violations:
        print(v)
    if violations:
        return EXIT_FAIL
    print(f"{len(doc.assertions)} assertion(s) hold")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    doc = _load(args.model)
    try:
        result = run_network(doc, seed=args.seed, max_steps=args.max_steps, idle_timeout=args.idle_timeout)
    except ExecutionError as exc:
        print(f"execution failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.trace is not None:
        _write(args.trace, result.dump_trace())
    for failure in result.failures:
        print(f"MISMATCH {failure}", file=sys.stderr)
    if result.exhausted:
        print(f"step budget of {args.max_steps} exhausted", file=sys.stderr)
    print(f"{result.events} event(s), {len(result.trace)} trace record(s)")
    return EXIT_OK if result.ok else EXIT_FAIL


def cmd_render(args: argparse.Namespace) -> int:
    doc = _load(args.model)
    asg = domains = None
    if args.solved or args.partitions:
        solved = _solve(doc, args.model)
        if isinstance(solved, Conflict):
            return _report_conflict(doc, solved, None)
        asg = solved if args.solved else None
        if args.partitions:
            domains = partition(doc.network, solved, args.strategy)
    _write(args.output, render_dot(doc.network, asg, domains))
    return EXIT_OK


def _non_negative(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must not be negative: {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="protopart", description="Guarantee analysis and partitioning of protocol models.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress and warnings")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="solve for the minimal guarantees")
    a.add_argument("model")
    a.add_argument("--dump", metavar="PATH", help="write the assignment here instead of stdout")
    a.add_argument("--out", metavar="PATH", help="write the annotated (or conflict-annotated) model")
    a.set_defaults(func=cmd_analyze)

    def strategy(sp: argparse.ArgumentParser, default: str = "branch") -> None:
        sp.add_argument("--strategy", choices=STRATEGIES, default=default)

    pt = sub.add_parser("partition", help="split the model into protection domains")
    pt.add_argument("model")
    strategy(pt)
    pt.add_argument("--weights", metavar="PATH", help="'kind = sloc' lines")
    pt.add_argument("--out", metavar="PATH", help="write the partitioned model")
    pt.add_argument("--policy", metavar="PATH", help="write the cross-domain channel policy")
    pt.add_argument("--merge-max-weight", type=_non_negative, metavar="N",
                    help="with branch, also merge instances of weight <= N into a dominating neighbour domain")
    pt.set_defaults(func=cmd_partition)

    c = sub.add_parser("check", help="check the model's assertions")
    c.add_argument("model")
    c.set_defaults(func=cmd_check)

    r = sub.add_parser("run", help="execute the model")
    r.add_argument("model")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--max-steps", type=_non_negative, default=100_000)
    r.add_argument("--trace", metavar="PATH")
    r.add_argument("--idle-timeout", type=float, default=5.0, metavar="SECONDS",
                   help="stop after this long without input from external sources")
    r.set_defaults(func=cmd_run)

    d = sub.add_parser("render", help="emit Graphviz DOT")
    d.add_argument("model")
    d.add_argument("--solved", action="store_true", help="style nodes by solved guarantees")
    d.add_argument("--partitions", action="store_true", help="draw protection domains as clusters")
    strategy(d)
    d.add_argument("-o", "--output", metavar="PATH")
    d.set_defaults(func=cmd_render)

    m = sub.add_parser("metrics", help="process, IPC and TCB figures")
    m.add_argument("model")
    strategy(m)
    m.add_argument("--weights", metavar="PATH")
    m.set_defaults(func=cmd_metrics)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
