"""
Property sweeps over randomly generated typed processes.

Each sweep draws processes from ``scripts.generate_processes`` and checks a
metatheoretic property of the type systems on every one of them:

  - seq-subject-reduction : typed transitions preserve the evolved thread indicator
  - wb-subject-reduction  : typed transitions preserve well-bracketed typability
  - erasure               : a stack typing erases to the matching sequential typing
  - no-disjoint-interactions, inactive-no-interaction, inactive-quiesces
  - trace-wellbracketed, trace-segments : generated traces obey the stack discipline

Results are saved as JSON and printed as a summary table.

Usage:
    python -m experiments.sweeps
    python -m experiments.sweeps --count 200 --max-size 10 --seed 3
"""

from __future__ import annotations

import argparse
import json
import logging
import time
from collections.abc import Callable, Iterator
from datetime import datetime, timezone
from pathlib import Path

from pydantic import BaseModel, Field

from calculus.lts import StateSpace, Transition
from calculus.parser import render
from calculus.syntax import CalculusError, Name, NameKind, Process
from discipline.brackets import (
    Stack,
    WbConfig,
    erase,
    evolve_stack,
    is_typed,
    make_discreet,
    stack_names,
    wb_allowed,
)
from discipline.sequential import (
    SeqConfig,
    evolve_eta,
    inactive_has_no_interaction,
    inactive_quiesces,
    no_disjoint_interactions,
    type_allowed,
    typecheck_seq,
)
from scripts.generate_processes import ProcessGenerator
from traces.generate import generate_traces
from traces.matching import check_wellbracketed, classify, segments_are_matched

logger = logging.getLogger(__name__)

RESULTS_DIR = Path("data/experiment_results")

MAX_EXAMPLES = 3


class PropertyResult(BaseModel):
    name: str
    checked: int = 0
    violations: int = 0
    examples: list[str] = Field(default_factory=list)
    latency_ms: float = 0.0

    @property
    def holds(self) -> bool:
        return self.violations == 0


class SweepReport(BaseModel):
    timestamp: str
    count: int
    max_size: int
    seed: int
    results: list[PropertyResult]

    @property
    def ok(self) -> bool:
        return all(r.holds for r in self.results)


# ── Reachable typed transitions ───────────────────────────────────────────────


def _seq_steps(p: Process, eta: int, budget: int, limit: int) -> Iterator[tuple[SeqConfig, Transition, SeqConfig]]:
    space = StateSpace(budget)
    root = SeqConfig(eta, space.add(p))
    frontier, seen = [root], {(root.eta, root.proc.key)}
    while frontier and len(seen) < limit:
        c = frontier.pop()
        for t in space.successors(c.proc, c.proc.fn):
            if not type_allowed(c, t.action):
                continue
            nxt = evolve_eta(c, t.action, t.target)
            yield c, t, nxt
            if (nxt.eta, nxt.proc.key) not in seen:
                seen.add((nxt.eta, nxt.proc.key))
                frontier.append(nxt)


def _fresh_conts(t: Transition, held: set[str]) -> bool:
    return all(
        o.id not in held for o in t.action.objects if isinstance(o, Name) and o.kind is NameKind.CONT
    )


def _wb_steps(p: Process, stack: Stack, budget: int, limit: int) -> Iterator[tuple[WbConfig, Transition, WbConfig]]:
    space = StateSpace(budget)
    root = WbConfig(stack, space.add(p))
    frontier, seen = [root], {root}
    while frontier and len(seen) < limit:
        c = frontier.pop()
        held = {n.id for n in c.proc.fn} | stack_names(c.stack)
        for t in space.successors(c.proc, c.proc.fn):
            if not wb_allowed(c, t):
                continue
            if t.action.is_input and not _fresh_conts(t, held):
                continue
            nxt = evolve_stack(c, t)
            yield c, t, nxt
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)


# ── Sweeps ────────────────────────────────────────────────────────────────────


def _sweep(name: str, cases: list, check: Callable[..., str | None]) -> PropertyResult:
    """Run ``check`` on every case; it returns ``None`` or a description of the violation."""
    result = PropertyResult(name=name)
    t0 = time.perf_counter()
    for case in cases:
        result.checked += 1
        try:
            problem = check(*case)
        except CalculusError as exc:
            problem = f"{type(exc).__name__}: {exc}"
        if problem is not None:
            result.violations += 1
            if len(result.examples) < MAX_EXAMPLES:
                result.examples.append(problem)
    result.latency_ms = round((time.perf_counter() - t0) * 1000, 1)
    logger.info("%s: %d checked, %d violations", name, result.checked, result.violations)
    return result


def _seq_subject_reduction(p: Process, eta: int, budget: int = 1, limit: int = 64) -> str | None:
    for c, t, nxt in _seq_steps(p, eta, budget, limit):
        got = typecheck_seq(t.target)
        if got != nxt.eta:
            return f"{render(c.proc)} --{t.action.key}--> {render(t.target)}: eta {got}, expected {nxt.eta}"
    return None


def _wb_subject_reduction(p: Process, stack: Stack, budget: int = 1, limit: int = 64) -> str | None:
    for c, t, nxt in _wb_steps(make_discreet(p), stack, budget, limit):
        if not is_typed(nxt.proc, nxt.stack):
            return f"{render(c.proc)} --{t.action.key}--> {render(t.target)} loses its typing"
    return None


def _erasure(p: Process, stack: Stack) -> str | None:
    if not is_typed(p, stack):
        return f"{render(p)} is not typed under its generated stack"
    eta = typecheck_seq(p)
    return None if eta == erase(stack) else f"{render(p)}: eta {eta}, stack erases to {erase(stack)}"


def _proposition(check: Callable[[Process], bool]) -> Callable[[Process], str | None]:
    return lambda p: None if check(p) else render(p)


def _traces(p: Process, stack: Stack, depth: int = 4, budget: int = 1) -> str | None:
    traces = generate_traces(WbConfig(stack, make_discreet(p)), depth=depth, budget=budget, max_traces=500)
    for trace in traces:
        classify(trace)
        if not check_wellbracketed(trace):
            return f"{render(p)}: {' '.join(a.key for a in trace.actions)} is not well bracketed"
    return None


def _segments(p: Process, stack: Stack, depth: int = 4, budget: int = 1) -> str | None:
    traces = generate_traces(WbConfig(stack, make_discreet(p)), depth=depth, budget=budget, max_traces=500)
    for trace in traces:
        if not segments_are_matched(trace):
            return f"{render(p)}: {' '.join(a.key for a in trace.actions)} has an unmatched segment"
    return None


def run_sweeps(count: int = 50, max_size: int = 8, seed: int = 0, persist: bool = True) -> SweepReport:
    """Generate ``count`` processes per family and check every property on them."""
    gen = ProcessGenerator(seed, max_size)
    seq_cases = []
    for _ in range(count):
        eta = gen.rng.randint(0, 1)
        seq_cases.append((gen.seq(eta), eta))
    wb_cases = [gen.wb() for _ in range(count)]
    procs = [(p,) for p, _ in seq_cases] + [(p,) for p, _ in wb_cases]

    logger.info("Running sweeps: %d seq + %d wb processes (max size %d)", count, count, max_size)
    results = [
        _sweep("seq-subject-reduction", seq_cases, _seq_subject_reduction),
        _sweep("wb-subject-reduction", wb_cases, _wb_subject_reduction),
        _sweep("erasure", wb_cases, _erasure),
        _sweep("no-disjoint-interactions", procs, _proposition(no_disjoint_interactions)),
        _sweep("inactive-no-interaction", procs, _proposition(inactive_has_no_interaction)),
        _sweep("inactive-quiesces", procs, _proposition(inactive_quiesces)),
        _sweep("trace-wellbracketed", wb_cases, _traces),
        _sweep("trace-segments", wb_cases, _segments),
    ]
    report = SweepReport(
        timestamp=datetime.now(timezone.utc).isoformat(),
        count=count,
        max_size=max_size,
        seed=seed,
        results=results,
    )

    if persist:
        RESULTS_DIR.mkdir(parents=True, exist_ok=True)
        out_path = RESULTS_DIR / f"sweeps_{datetime.now(timezone.utc).strftime('%Y%m%d_%H%M%S')}.json"
        out_path.write_text(json.dumps(report.model_dump(), indent=2, ensure_ascii=False), encoding="utf-8")
        logger.info("Sweep report saved to %s", out_path)

    _print_summary(results)
    return report


def _print_summary(results: list[PropertyResult]) -> None:
    """Print a human-readable table of the sweeps."""
    try:
        from rich.console import Console
        from rich.table import Table

        console = Console()
        table = Table(title="Property Sweeps", show_header=True, header_style="bold cyan")
        table.add_column("Property")
        table.add_column("Checked", justify="right")
        table.add_column("Violations", justify="right")
        table.add_column("Latency (ms)", justify="right")
        table.add_column("First violation")

        for r in results:
            table.add_row(
                r.name,
                str(r.checked),
                str(r.violations) if r.violations else "[green]0[/green]",
                f"{r.latency_ms:.0f}",
                r.examples[0] if r.examples else "",
            )

        console.print(table)
    except ImportError:
        for r in results:
            print(f"  {r.name}: checked={r.checked} violations={r.violations} lat={r.latency_ms:.0f}ms")


def main():
    parser = argparse.ArgumentParser(description="Check typing properties on generated processes")
    parser.add_argument("--count", type=int, default=50, help="Processes per family")
    parser.add_argument("--max-size", type=int, default=8, help="Syntax nodes per process")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    logging.basicConfig(level="INFO", format="%(levelname)s | %(message)s")
    report = run_sweeps(count=args.count, max_size=args.max_size, seed=args.seed)
    raise SystemExit(0 if report.ok else 1)


if __name__ == "__main__":
    main()
