"""
Mode dispatcher: one entry point for every equivalence query.

Supports both sync (`check`) and async (`acheck_many`) execution. The async
path runs independent queries in worker threads via `asyncio.gather`.
"""

from __future__ import annotations

import asyncio
import logging
import time
from dataclasses import dataclass

from calculus.lts import StepContext
from calculus.syntax import Name, Process
from discipline.brackets import Stack, WbConfig, make_discreet
from discipline.references import accessible_refs
from discipline.sequential import SeqConfig, typecheck_seq
from equiv.deciders import DEFAULT_MAX_PAIRS, ConfigurationMismatch, bisim_ordinary, bisim_seq, bisim_wb
from equiv.games import SeqTyping
from equiv.spotcheck import barbed_spotcheck, sample_contexts
from equiv.verdict import Verdict

logger = logging.getLogger(__name__)

MODES = ("ordinary", "seq", "seq-refs", "wb", "wb-upto", "barbed-seq", "barbed-wb", "barbed-wb-raw")


@dataclass(frozen=True)
class Query:
    mode: str
    lhs: Process
    rhs: Process
    typing: object = None


def _seq_typing(p: Process, typing, refs: bool) -> SeqTyping:
    if isinstance(typing, SeqTyping):
        return typing
    eta = typing if isinstance(typing, int) else typecheck_seq(p)
    if eta is None:
        raise ConfigurationMismatch(f"process is not sequentially typable: {p.key}")
    return SeqTyping(eta, frozenset(accessible_refs(p)) if refs else None)


def check(
    mode: str,
    lhs: Process,
    rhs: Process,
    typing=None,
    budget: int = 4,
    max_pairs: int = DEFAULT_MAX_PAIRS,
    ctx: StepContext | None = None,
    env: frozenset[Name] = frozenset(),
    contexts: int = 20,
) -> Verdict:
    """Decide ``lhs`` against ``rhs`` in ``mode``.

    ``typing`` is the thread indicator (or a ``SeqTyping``) for the sequential
    modes and the stack for the well-bracketed ones; the indicator is derived
    from ``lhs`` when omitted, the stack defaults to empty.
    """
    if mode == "ordinary":
        return bisim_ordinary(lhs, rhs, budget, max_pairs, ctx, env)
    if mode in ("seq", "seq-refs"):
        t = _seq_typing(lhs, typing, mode == "seq-refs")
        right_refs = frozenset(accessible_refs(rhs)) if t.refs is not None else None
        return bisim_seq(
            SeqConfig(t.eta, lhs, t.refs), SeqConfig(t.eta, rhs, right_refs), budget, max_pairs, ctx, env
        )
    if mode in ("wb", "wb-upto"):
        stack: Stack = typing or ()
        return bisim_wb(WbConfig(stack, lhs), WbConfig(stack, rhs), budget, max_pairs, ctx, env, upto=mode == "wb-upto")
    if mode == "barbed-seq":
        t = _seq_typing(lhs, typing, refs=False)
        sampled = sample_contexts(lhs, rhs, t, "seq", n=contexts)
        return barbed_spotcheck(lhs, rhs, sampled, "seq", budget, max_pairs, ctx)
    if mode == "barbed-wb":
        stack = typing or ()
        left, right = make_discreet(lhs), make_discreet(rhs)
        sampled = sample_contexts(left, right, stack, "wb", n=contexts)
        return barbed_spotcheck(left, right, sampled, "wb", budget, max_pairs, ctx)
    if mode == "barbed-wb-raw":
        stack = typing or ()
        sampled = sample_contexts(lhs, rhs, stack, "wb-raw", n=contexts)
        return barbed_spotcheck(lhs, rhs, sampled, "wb-raw", budget, max_pairs, ctx)
    raise ValueError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")


async def acheck_many(
    queries: list[Query],
    budget: int = 4,
    max_pairs: int = DEFAULT_MAX_PAIRS,
    ctx: StepContext | None = None,
) -> list[Verdict]:
    """Decide independent queries concurrently; results keep the order of ``queries``."""
    t0 = time.perf_counter()

    async def _invoke(q: Query) -> Verdict:
        return await asyncio.to_thread(check, q.mode, q.lhs, q.rhs, q.typing, budget, max_pairs, ctx)

    verdicts = await asyncio.gather(*[_invoke(q) for q in queries])
    latency_ms = (time.perf_counter() - t0) * 1000
    logger.info("%d queries completed in %.0f ms (async)", len(queries), latency_ms)
    return list(verdicts)


__all__ = ["MODES", "Query", "acheck_many", "check"]
