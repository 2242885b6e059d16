"""
piwb: command-line front end of the workbench.

Usage:
    piwb parse data/corpus/thread.pi
    piwb typecheck data/corpus/thread.pi --proc P --seq
    piwb typecheck data/corpus/typings_wb.pi --proc P0 --enumerate-stacks
    piwb lts data/corpus/z_example.pi --proc P --budget 2 --dump
    piwb trace data/corpus/forwarder.pi --proc Global --stack "p^o" --depth 6 --check-wb
    piwb equiv swap.pi swapd.pi --mode ordinary
    piwb check-cert data/corpus/swap_faa.pi --relation SwapRel
    piwb corpus --run

Exit codes: 0 accepted / equivalent, 1 rejected / distinguished,
2 bounded (the budget cut the search), 3 usage or input error.
"""

from __future__ import annotations

import argparse
import asyncio
import logging
import sys
from pathlib import Path

from rich.console import Console
from rich.markup import escape
from rich.table import Table

from calculus.lts import StepContext, dump_graph, explore
from calculus.parser import SourceUnit, parse, parse_stack, render, render_stack
from calculus.syntax import CalculusError, Process
from cli.observability import configure_logging, timed_command
from cli.settings import Settings, settings
from corpus.loader import load_corpus
from discipline.brackets import WbConfig, enumerate_stacks, make_discreet, typecheck_wb
from discipline.sequential import seq_derivation
from equiv.certificate import acheck_certificate, check_certificate
from equiv.dispatch import MODES, check
from equiv.verdict import Outcome, Verdict
from evals.runner import run_corpus
from traces.generate import generate_traces
from traces.matching import check_wellbracketed, classify, match_qa

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_REJECTED = 1
EXIT_BOUNDED = 2
EXIT_ERROR = 3

_OUTCOME_EXIT = {Outcome.YES: EXIT_OK, Outcome.NO: EXIT_REJECTED, Outcome.BOUNDED: EXIT_BOUNDED}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


# ── Output ────────────────────────────────────────────────────────────────────


class Reporter:
    """Prints key/value records as text for people or as ``key=value`` lines for tools."""

    def __init__(self, fmt: str, console: Console | None = None):
        self.fmt = fmt
        self.console = console or Console(highlight=False)

    def records(self, records: list[tuple[str, str]], verdict: str | None = None) -> None:
        if self.fmt == "structured":
            for key, value in records:
                self.console.print(escape(f"{key}={value}"), soft_wrap=True)
            if verdict is not None:
                self.console.print(f"VERDICT={verdict}", soft_wrap=True)
            return
        for key, value in records:
            self.console.print(f"[bold]{escape(key)}[/bold] = {escape(value)}", soft_wrap=True)
        if verdict is not None:
            colour = "green" if verdict in ("YES", "OK", "TYPED", "PASS") else "red"
            self.console.print(f"[bold {colour}]{verdict}[/bold {colour}]")

    def table(self, table: Table) -> None:
        if self.fmt != "structured":
            self.console.print(table)

    def text(self, text: str) -> None:
        # dumps are tab-separated; rich would expand the tabs
        self.console.file.write(text)


def _verdict_records(verdict: Verdict) -> tuple[list[tuple[str, str]], str]:
    records = verdict.records()
    return records[:-1], records[-1][1]


# ── Inputs ────────────────────────────────────────────────────────────────────


def _load(path: str, config: Settings) -> SourceUnit:
    return parse(Path(path).read_text(encoding="utf-8"), val_size=config.val_size)


def _pick(unit: SourceUnit, name: str | None) -> Process:
    if name is not None:
        return unit.process(name)
    if not unit.definitions:
        raise CalculusError("the file defines no process")
    return list(unit.definitions.values())[-1]


def _ctx(unit: SourceUnit) -> StepContext:
    return StepContext(domain=unit.domain)


# ── Commands ──────────────────────────────────────────────────────────────────


@timed_command("parse")
def cmd_parse(args, config: Settings, out: Reporter) -> int:
    unit = _load(args.file, config)
    records = [("declarations", str(len(unit.declarations)))]
    records += [(f"proc.{name}", render(p)) for name, p in unit.definitions.items()]
    records += [(f"stack.{name}", render_stack(s)) for name, s in unit.stacks.items()]
    records += [
        (f"relation.{name}", f"{cert.mode}, {len(cert.triples)} triples")
        for name, cert in unit.relations.items()
    ]
    out.records(records, "OK")
    return EXIT_OK


@timed_command("typecheck")
def cmd_typecheck(args, config: Settings, out: Reporter) -> int:
    unit = _load(args.file, config)
    proc = _pick(unit, args.proc)
    if args.enumerate_stacks:
        stacks = enumerate_stacks(proc)
        records = [(f"stack.{i}", render_stack(s)) for i, s in enumerate(stacks)]
        out.records(records or [("stacks", "none")], "TYPED" if stacks else "UNTYPABLE")
        return EXIT_OK if stacks else EXIT_REJECTED
    if args.wb:
        if args.stack in unit.stacks:
            stack = unit.stacks[args.stack]
        else:
            stack = parse_stack(args.stack or "", unit)
        result = typecheck_wb(proc, stack)
        records = [("stack", render_stack(stack))]
        if not result and result.failure is not None:
            f = result.failure
            records += [("rule", f.rule), ("subterm", f.subterm), ("reason", f.reason)]
        out.records(records, "TYPED" if result else "UNTYPABLE")
        return EXIT_OK if result else EXIT_REJECTED
    derived = seq_derivation(proc)
    if isinstance(derived, int):
        out.records([("eta", str(derived))], "TYPED")
        return EXIT_OK
    records = [("rule", derived.rule), ("subterm", derived.subterm), ("reason", derived.reason)]
    out.records(records, "UNTYPABLE")
    return EXIT_REJECTED


@timed_command("lts")
def cmd_lts(args, config: Settings, out: Reporter) -> int:
    unit = _load(args.file, config)
    graph = explore(_pick(unit, args.proc), budget=config.budget, ctx=_ctx(unit))
    records = [
        ("states", str(len(graph))),
        ("transitions", str(len(graph.edges))),
        ("truncated", str(len(graph.truncated))),
        ("tau_cycle", str(graph.has_tau_cycle()).lower()),
    ]
    if args.dump:
        out.text(dump_graph(graph))
    out.records(records, "BOUNDED" if graph.truncated else "OK")
    return EXIT_BOUNDED if graph.truncated else EXIT_OK


@timed_command("trace")
def cmd_trace(args, config: Settings, out: Reporter) -> int:
    from traces.trace import dump_trace

    unit = _load(args.file, config)
    stack = parse_stack(args.stack or "", unit)
    proc = make_discreet(_pick(unit, args.proc))
    traces = generate_traces(WbConfig(stack, proc), depth=config.depth, budget=config.budget, ctx=_ctx(unit))
    records = [
        ("traces", str(len(traces))),
        ("longest", str(max((len(t.steps) for t in traces), default=0))),
    ]
    bad = 0
    if args.check_wb:
        for t in traces:
            classify(t)
            match_qa(t)
            if not check_wellbracketed(t):
                bad += 1
                records.append((f"not_wellbracketed.{bad}", " ".join(str(a) for a in t.actions)))
        records.append(("wellbracketed", f"{len(traces) - bad}/{len(traces)}"))
    if args.dump:
        for i, t in enumerate(traces):
            out.text(f"# trace {i}\n{dump_trace(t)}")
    out.records(records, "OK" if not bad else "NOT-WELLBRACKETED")
    return EXIT_OK if not bad else EXIT_REJECTED


@timed_command("equiv")
def cmd_equiv(args, config: Settings, out: Reporter) -> int:
    unit_a = _load(args.files[0], config)
    if len(args.files) == 2:
        unit_b = _load(args.files[1], config)
        lhs, rhs = _pick(unit_a, args.lhs), _pick(unit_b, args.rhs)
    else:
        if args.lhs is None or args.rhs is None:
            raise CalculusError("with a single file, name both sides with --lhs and --rhs")
        lhs, rhs = unit_a.process(args.lhs), unit_a.process(args.rhs)
    typing = args.eta
    if args.mode in ("wb", "wb-upto", "barbed-wb", "barbed-wb-raw"):
        typing = parse_stack(args.stack or "", unit_a)
    verdict = check(
        args.mode,
        lhs,
        rhs,
        typing,
        budget=config.budget,
        max_pairs=config.max_pairs,
        ctx=_ctx(unit_a),
        contexts=config.spot_contexts,
    )
    records, final = _verdict_records(verdict)
    out.records(records, final)
    return _OUTCOME_EXIT[verdict.outcome]


@timed_command("check-cert")
def cmd_check_cert(args, config: Settings, out: Reporter) -> int:
    unit = _load(args.file, config)
    names = [args.relation] if args.relation else sorted(unit.relations)
    if not names:
        raise CalculusError("the file contains no relation")
    verdicts: list[Verdict] = []
    for name in names:
        if name not in unit.relations:
            raise CalculusError(f"no relation named '{name}'")
        cert = unit.relations[name]
        kwargs = dict(budget=config.budget, max_pairs=config.max_pairs, ctx=_ctx(unit), mode=args.mode)
        if args.concurrent:
            verdict = asyncio.run(acheck_certificate(cert, **kwargs))
        else:
            verdict = check_certificate(cert, **kwargs)
        records, _ = _verdict_records(verdict)
        out.records([(f"{name}.{k}", v) for k, v in records])
        verdicts.append(verdict)
    worst = max(verdicts, key=lambda v: (v.outcome is Outcome.NO, v.outcome is Outcome.BOUNDED))
    out.records([], worst.outcome.value.upper())
    return _OUTCOME_EXIT[worst.outcome]


@timed_command("corpus")
def cmd_corpus(args, config: Settings, out: Reporter) -> int:
    ids = args.ids or None
    if not args.run:
        table = Table(title="Corpus", show_header=True, header_style="bold cyan")
        table.add_column("Id")
        table.add_column("File")
        table.add_column("Checks", justify="right")
        table.add_column("Claim")
        records = []
        for e in load_corpus(ids):
            n = len(e.typings) + len(e.queries) + len(e.certificates)
            table.add_row(e.id, e.file, str(n), e.claim)
            records.append((f"entry.{e.id}", e.file))
        out.table(table)
        if out.fmt == "structured":
            out.records(records, "OK")
        return EXIT_OK

    report = run_corpus(
        ids,
        budget=config.budget if args.budget_override else None,
        spotcheck=not args.no_spotcheck,
        include_slow=not args.skip_slow,
    )
    table = Table(title="Corpus run", show_header=True, header_style="bold cyan")
    table.add_column("Entry")
    table.add_column("Check")
    table.add_column("Expected")
    table.add_column("Actual")
    table.add_column("Latency (ms)", justify="right")
    table.add_column("")
    records = []
    for i, r in enumerate(report.results):
        mark = "PASS" if r.passed else "FAIL"
        table.add_row(r.entry, r.label, r.expected, r.actual, f"{r.latency_ms:.0f}", mark)
        summary = f"{r.entry} {r.kind} {r.label}: expected {r.expected}, got {r.actual} {mark}"
        records.append((f"check.{i}", summary))
    out.table(table)
    records += [("passed", str(report.passed)), ("failed", str(report.failed))]
    out.records(records if out.fmt == "structured" else records[-2:], "PASS" if report.ok else "FAIL")
    return EXIT_OK if report.ok else EXIT_REJECTED


# ── Argument parsing ──────────────────────────────────────────────────────────


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=["human", "structured"], default=argparse.SUPPRESS)
    common.add_argument("--budget", type=int, default=argparse.SUPPRESS, help="replication unfoldings")
    common.add_argument("--log-level", default=argparse.SUPPRESS)

    parser = _Parser(prog="piwb", description="Asynchronous pi-calculus workbench", parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", parents=[common], help="parse a .pi file and print its definitions")
    p.add_argument("file")

    p = sub.add_parser("typecheck", parents=[common], help="sequential or well-bracketed typing")
    p.add_argument("file")
    p.add_argument("--proc")
    how = p.add_mutually_exclusive_group()
    how.add_argument("--seq", action="store_true", help="thread indicator (default)")
    how.add_argument("--wb", action="store_true", help="check against --stack")
    how.add_argument("--enumerate-stacks", action="store_true")
    p.add_argument("--stack", help="stack literal or the name of a stack in the file")

    p = sub.add_parser("lts", parents=[common], help="explore the labelled transition system")
    p.add_argument("file")
    p.add_argument("--proc")
    p.add_argument("--dump", action="store_true", help="print edges and states")

    p = sub.add_parser("trace", parents=[common], help="generate typed traces")
    p.add_argument("file")
    p.add_argument("--proc")
    p.add_argument("--stack", default="")
    p.add_argument("--depth", type=int, default=argparse.SUPPRESS)
    p.add_argument("--check-wb", action="store_true")
    p.add_argument("--dump", action="store_true")

    p = sub.add_parser("equiv", parents=[common], help="decide an equivalence")
    p.add_argument("files", nargs="+", metavar="file")
    p.add_argument("--lhs")
    p.add_argument("--rhs")
    p.add_argument("--mode", choices=MODES, default="seq")
    p.add_argument("--eta", type=int, choices=[0, 1])
    p.add_argument("--stack", default="")

    p = sub.add_parser("check-cert", parents=[common], help="check relation certificates")
    p.add_argument("file")
    p.add_argument("--relation")
    p.add_argument("--mode", choices=MODES[:5])
    p.add_argument("--concurrent", action="store_true", help="compute obligations in worker threads")

    p = sub.add_parser("corpus", parents=[common], help="list or run the corpus")
    p.add_argument("--run", action="store_true")
    p.add_argument("--ids", nargs="+")
    p.add_argument("--no-spotcheck", action="store_true")
    p.add_argument("--skip-slow", action="store_true")
    return parser


_OVERRIDES = (
    ("format", "output_format"),
    ("budget", "budget"),
    ("log_level", "log_level"),
    ("depth", "depth"),
)

_COMMANDS = {
    "parse": cmd_parse,
    "typecheck": cmd_typecheck,
    "lts": cmd_lts,
    "trace": cmd_trace,
    "equiv": cmd_equiv,
    "check-cert": cmd_check_cert,
    "corpus": cmd_corpus,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "equiv" and len(args.files) > 2:
        print("piwb equiv: at most two files", file=sys.stderr)
        return EXIT_ERROR

    overrides = {field: getattr(args, attr) for attr, field in _OVERRIDES if hasattr(args, attr)}
    args.budget_override = "budget" in overrides
    try:
        config = Settings.model_validate({**settings.model_dump(), **overrides})
    except ValueError as exc:
        print(f"piwb: invalid option: {exc}", file=sys.stderr)
        return EXIT_ERROR
    configure_logging(config.log_level, config.structured_logs)

    out = Reporter(config.output_format)
    try:
        return _COMMANDS[args.command](args, config, out)
    except (CalculusError, OSError, ValueError) as exc:
        logger.debug("command failed", exc_info=True)
        print(f"piwb {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
