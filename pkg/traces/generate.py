"""Exhaustive trace generation from clean, discreet typed configurations."""

from __future__ import annotations

import logging

from calculus.lts import StateSpace, StepContext
from calculus.syntax import BudgetExceeded, CalculusError, Name, NameKind
from discipline.brackets import WbConfig, evolve_stack, is_clean, is_discreet, wb_allowed
from traces.trace import Trace, TraceStep

logger = logging.getLogger(__name__)


class NotDiscreet(CalculusError):
    pass


def _fresh_conts(action, seen: set[str]) -> bool:
    conts = [o for o in action.objects if isinstance(o, Name) and o.kind is NameKind.CONT]
    return all(c.id not in seen for c in conts)


def generate_traces(
    config: WbConfig,
    depth: int = 8,
    budget: int = 4,
    ctx: StepContext | None = None,
    strict: bool = False,
    max_traces: int = 100_000,
) -> list[Trace]:
    """Every typed trace of length at most ``depth``, prefixes included.

    Names already seen along a trace are offered to later inputs, so fresh
    names grow monotonically along each branch.
    """
    if not is_clean(config.stack):
        raise NotDiscreet("trace generation needs a clean stack")
    if not is_discreet(config.proc):
        raise NotDiscreet("trace generation needs a discreet process")
    space = StateSpace(budget, ctx=ctx or StepContext())
    root = WbConfig(config.stack, space.add(config.proc))
    found: dict[tuple, Trace] = {}
    truncated = False

    def go(c: WbConfig, trace: Trace, seen: set[str]) -> None:
        nonlocal truncated
        found.setdefault(trace.key, trace)
        if len(trace) >= depth or len(found) >= max_traces:
            return
        env = frozenset(n for n in c.proc.fn) | frozenset(
            n for a in trace.actions for n in a.names() if not n.is_literal
        )
        for t in space.successors(c.proc, env):
            if not wb_allowed(c, t):
                continue
            if not t.action.is_output and not _fresh_conts(t.action, seen):
                continue
            nxt = evolve_stack(c, t)
            step = TraceStep(t.action, c.stack, nxt.stack)
            go(nxt, trace.extend(step), seen | {n.id for n in t.action.names()})
        if space.is_truncated(c.proc):
            truncated = True

    go(root, Trace(root=root), {n.id for n in root.proc.fn} | {e.name.id for e in root.stack})
    if strict and truncated:
        raise BudgetExceeded(f"trace generation reached the replication budget {budget}")
    traces = sorted(found.values(), key=lambda tr: tr.key)
    logger.debug("generated %d traces to depth %d (truncated=%s)", len(traces), depth, truncated)
    return traces
