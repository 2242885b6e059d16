"""
Corpus acceptance runner.

Checks evaluated per corpus entry:
  - typing       : the seq indicator or the wb stack derivation matches
  - query        : the equivalence verdict matches the expected outcome
  - certificate  : the relation checker accepts or rejects as expected
  - spotcheck    : pairs decided equivalent survive sampled typed contexts

Results are returned as a ``CorpusReport`` and persisted to
``settings.results_dir`` as JSON for tracking across runs.
"""

from __future__ import annotations

import logging
import time
from datetime import datetime, timezone
from pathlib import Path

from pydantic import BaseModel, Field

from calculus.parser import render_stack
from cli.settings import settings
from corpus.loader import CorpusEntry, QueryExpectation, TypingExpectation, expectation_met, load_corpus
from discipline.brackets import enumerate_stacks, make_discreet, typecheck_wb
from discipline.references import accessible_refs
from discipline.sequential import seq_derivation, typecheck_seq
from equiv.certificate import check_certificate
from equiv.dispatch import check
from equiv.games import SeqTyping
from equiv.spotcheck import barbed_spotcheck, sample_contexts
from equiv.verdict import Outcome, Verdict

logger = logging.getLogger(__name__)

_SPOT_MODES = ("seq", "seq-refs", "wb", "wb-upto")


class CheckResult(BaseModel):
    entry: str
    kind: str  # typing | query | certificate | spotcheck
    label: str
    expected: str
    actual: str
    passed: bool
    latency_ms: float = 0.0
    detail: list[str] = Field(default_factory=list)


class CorpusReport(BaseModel):
    timestamp: str
    budget: int
    n_entries: int
    n_checks: int
    passed: int
    failed: int
    avg_latency_ms: float
    results: list[CheckResult]

    @property
    def ok(self) -> bool:
        return self.failed == 0


# ── Individual checks ─────────────────────────────────────────────────────────


def _typing(entry: CorpusEntry, t: TypingExpectation) -> CheckResult:
    proc = entry.process(t.proc)
    if t.discipline == "seq":
        derived = seq_derivation(proc)
        actual = str(derived) if isinstance(derived, int) else f"untypable ({derived.rule})"
        expected = str(t.eta) if t.typable else "untypable"
        passed = (typecheck_seq(proc) == t.eta) if t.typable else not isinstance(derived, int)
        label = f"seq {t.proc}"
        return CheckResult(entry=entry.id, kind="typing", label=label, expected=expected, actual=actual, passed=passed)
    if t.typable:
        stack = entry.stack(t.stack)
        result = typecheck_wb(proc, stack)
        actual = "typed" if result else f"untyped ({result.failure.rule if result.failure else '?'})"
        return CheckResult(
            entry=entry.id,
            kind="typing",
            label=f"wb {t.proc} : {render_stack(stack)}",
            expected="typed",
            actual=actual,
            passed=bool(result),
        )
    stacks = enumerate_stacks(proc)
    return CheckResult(
        entry=entry.id,
        kind="typing",
        label=f"wb {t.proc}",
        expected="no stack",
        actual=f"{len(stacks)} stacks",
        passed=not stacks,
        detail=[render_stack(s) for s in stacks],
    )


def _declared_refs_match(entry: CorpusEntry, q: QueryExpectation) -> bool:
    if q.refs is None:
        return True
    declared = {s.strip() for s in q.refs.split(",") if s.strip()}
    return {r.id for r in accessible_refs(entry.process(q.lhs))} == declared


def _query(entry: CorpusEntry, q: QueryExpectation, budget: int) -> tuple[CheckResult, Verdict]:
    lhs, rhs = entry.process(q.lhs), entry.process(q.rhs)
    verdict = check(
        q.mode,
        lhs,
        rhs,
        entry.query_typing(q),
        budget=budget,
        max_pairs=settings.max_pairs,
        ctx=entry.step_context(),
    )
    refs_ok = _declared_refs_match(entry, q)
    detail = [f"{k}={v}" for k, v in verdict.records()]
    if not refs_ok:
        detail.insert(0, "declared references differ from the accessible ones")
    return (
        CheckResult(
            entry=entry.id,
            kind="query",
            label=f"{q.mode} {q.lhs} ~ {q.rhs}",
            expected=q.expect,
            actual=verdict.outcome.value,
            passed=refs_ok and expectation_met(q.expect, verdict),
            latency_ms=verdict.stats.latency_ms,
            detail=detail,
        ),
        verdict,
    )


def _spotcheck(entry: CorpusEntry, q: QueryExpectation, budget: int) -> CheckResult:
    t0 = time.perf_counter()
    lhs, rhs = entry.process(q.lhs), entry.process(q.rhs)
    if q.mode in ("wb", "wb-upto"):
        mode, typing = "wb", entry.stack(q.stack)
        lhs, rhs = make_discreet(lhs), make_discreet(rhs)
    else:
        mode = q.mode
        eta = q.eta if q.eta is not None else typecheck_seq(lhs)
        typing = SeqTyping(eta, frozenset(accessible_refs(lhs)) if mode == "seq-refs" else None)
    contexts = sample_contexts(lhs, rhs, typing, mode, n=settings.spot_contexts)
    verdict = barbed_spotcheck(lhs, rhs, contexts, mode, budget, settings.max_pairs, entry.step_context())
    return CheckResult(
        entry=entry.id,
        kind="spotcheck",
        label=f"barbed-{mode} {q.lhs} ~ {q.rhs}",
        expected="not separated",
        actual=f"{verdict.outcome.value} over {len(contexts)} contexts",
        passed=verdict.outcome is not Outcome.NO,
        latency_ms=round((time.perf_counter() - t0) * 1000, 1),
        detail=[f.lhs for f in verdict.failures],
    )


def _certificate(entry: CorpusEntry, c, budget: int) -> CheckResult:
    cert = entry.unit().relations[c.relation]
    verdict = check_certificate(
        cert,
        budget=budget,
        max_pairs=settings.max_pairs,
        ctx=entry.step_context(),
        mode=c.mode,
    )
    passed = expectation_met(c.expect, verdict)
    if c.failure_action is not None:
        passed = passed and any(f.action == c.failure_action for f in verdict.failures)
    return CheckResult(
        entry=entry.id,
        kind="certificate",
        label=f"{c.mode or cert.mode} {c.relation}",
        expected=c.expect if c.failure_action is None else f"{c.expect} at {c.failure_action}",
        actual=verdict.outcome.value,
        passed=passed,
        latency_ms=verdict.stats.latency_ms,
        detail=[f"{k}={v}" for k, v in verdict.records()],
    )


def check_entry(entry: CorpusEntry, budget: int | None = None, spotcheck: bool = True) -> list[CheckResult]:
    """Every check of one entry; the entry's own budget wins over ``budget``."""
    budget = entry.budget if entry.budget is not None else (budget if budget is not None else settings.budget)
    results = [_typing(entry, t) for t in entry.typings]
    for q in entry.queries:
        result, verdict = _query(entry, q, budget)
        results.append(result)
        if spotcheck and q.mode in _SPOT_MODES and verdict.outcome is Outcome.YES:
            results.append(_spotcheck(entry, q, budget))
    results.extend(_certificate(entry, c, budget) for c in entry.certificates)
    return results


# ── Runner ────────────────────────────────────────────────────────────────────


def run_corpus(
    ids: list[str] | None = None,
    budget: int | None = None,
    spotcheck: bool = True,
    include_slow: bool = True,
    persist: bool = True,
) -> CorpusReport:
    entries = [e for e in load_corpus(ids) if include_slow or not e.slow or ids]

    results: list[CheckResult] = []
    for entry in entries:
        logger.info("Running corpus entry: %s", entry.id)
        entry_results = check_entry(entry, budget, spotcheck)
        for r in entry_results:
            if not r.passed:
                logger.warning("%s: %s expected %s, got %s", entry.id, r.label, r.expected, r.actual)
        results.extend(entry_results)

    passed = sum(1 for r in results if r.passed)
    timed = [r.latency_ms for r in results if r.latency_ms]
    report = CorpusReport(
        timestamp=datetime.now(timezone.utc).isoformat(),
        budget=budget if budget is not None else settings.budget,
        n_entries=len(entries),
        n_checks=len(results),
        passed=passed,
        failed=len(results) - passed,
        avg_latency_ms=round(sum(timed) / len(timed), 1) if timed else 0.0,
        results=results,
    )

    if persist:
        results_dir = Path(settings.results_dir)
        results_dir.mkdir(parents=True, exist_ok=True)
        out_path = results_dir / f"corpus_{datetime.now(timezone.utc).strftime('%Y%m%d_%H%M%S')}.json"
        out_path.write_text(report.model_dump_json(indent=2))
        logger.info("Corpus report saved to %s", out_path)

    return report
