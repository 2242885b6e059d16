"""
Barbed spot checks: plug both sides into typed static contexts and compare
them under internal moves and observable barbs.

Contexts are sampled from the free names of the pair: outputs, inputs that
signal on a fresh observer name, reference cells, restrictions, and small
parallel combinations of those. Well-bracketed pairs are first wrapped in
their forwarder context. In the raw well-bracketed mode the pair need not be
discreet: calls are answered by servers in the context and barbs are the
plain untyped ones.
"""

from __future__ import annotations

import itertools
import logging
import random
from dataclasses import dataclass

from calculus.lts import StateSpace, StepContext
from calculus.syntax import (
    Input,
    Name,
    NameKind,
    Output,
    Process,
    StaticContext,
    Tau,
    fresh_name,
    literal,
    par,
    plug,
    walk,
)
from discipline.brackets import DecompositionError, build_forwarder_context, continuation_signature, is_typed
from discipline.references import MultipleOutputs, accessible_refs
from discipline.sequential import typecheck_seq
from equiv.engine import Engine, witness_of
from equiv.games import SeqTyping, game_for
from equiv.verdict import ChallengeFailure, Outcome, Stats, Verdict, combine

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TypedContext:
    """A static context with the typing of anything plugged into it."""

    ctx: StaticContext
    typing: object
    label: str = ""


_WB_MODES = ("wb", "wb-upto", "wb-raw")


def _fresh(kind: NameKind, avoid: set[str], sort=None, tag: str = "c") -> Name:
    n = fresh_name(kind, avoid, sort, tag)
    avoid.add(n.id)
    return n


def _objects(sort: tuple[NameKind, ...], pool: list[Name], value: Name, avoid: set[str]) -> tuple[Name, ...]:
    objs: list[Name] = []
    for kind in sort:
        if kind is NameKind.VAL:
            objs.append(value)
            continue
        known = [n for n in pool if n.kind is kind]
        objs.append(known[0] if known else _fresh(kind, avoid))
    return tuple(objs)


def _frames(names: list[Name], avoid: set[str], skip_refs: set[str], wb: bool) -> list[tuple[Process, str]]:
    """Single context components over ``names``, each with a short label."""
    frames: list[tuple[Process, str]] = []
    observer = _fresh(NameKind.OUT, avoid, sort=(), tag="o")
    for a in names:
        sort = a.sort or ()
        if NameKind.CONT in sort:
            continue
        values = [literal(0), literal(1)] if NameKind.VAL in sort else [literal(0)]
        if a.kind is NameKind.IN or (a.kind is NameKind.REF and a.id not in skip_refs) or (
            a.kind is NameKind.OUT and not wb
        ):
            for v in values:
                objs = _objects(sort, names, v, avoid)
                frames.append((Output(a, objs), f"{a.id}<{','.join(o.id for o in objs)}>"))
        if wb or a.kind is NameKind.REF:
            continue
        binders = tuple(_fresh(k, avoid) for k in sort)
        signal = Input(a, binders, Output(observer, ()))
        frames.append((signal, f"{a.id}(..).{observer.id}"))
        frames.append((Tau(signal), f"tau.{a.id}(..).{observer.id}"))
    return frames


def _answer_shape(a: Name, procs: tuple[Process, ...]) -> tuple[NameKind, ...]:
    for proc in procs:
        for node in walk(proc):
            if isinstance(node, Output) and node.subject.id == a.id and node.objects:
                return continuation_signature(node.objects[-1], procs)
    return ()


def _answer_frames(names: list[Name], avoid: set[str], procs: tuple[Process, ...]) -> list[tuple[Process, str]]:
    """Servers that answer one call at each output-controlled call name."""
    frames: list[tuple[Process, str]] = []
    for a in names:
        sort = a.sort or ()
        if a.kind is not NameKind.OUT or not sort or sort[-1] is not NameKind.CONT:
            continue
        shape = _answer_shape(a, procs)
        binders = tuple(_fresh(k, avoid) for k in sort[:-1])
        k = _fresh(NameKind.CONT, avoid, sort=shape, tag="k")
        answer = tuple(literal(0) if kind is NameKind.VAL else _fresh(kind, avoid) for kind in shape)
        frames.append((Input(a, binders + (k,), Output(k, answer)), f"{a.id}(..).{k.id}<..>"))
    return frames


def _context_typing(
    mode: str, typing, frames: tuple[Process, ...], ctx: StaticContext, lhs: Process
) -> tuple[bool, object]:
    """Typing of the hole's contents once plugged, or ``(False, None)`` for an ill-typed context."""
    if mode == "ordinary":
        return True, None
    if mode in _WB_MODES:
        return all(is_typed(f, ()) for f in frames), None if mode == "wb-raw" else typing
    extra = typecheck_seq(par(*frames)) if frames else 0
    if extra is None or typing.eta + extra > 1:
        return False, None
    refs = None
    if typing.refs is not None:
        try:
            refs = accessible_refs(plug(ctx, lhs))
        except MultipleOutputs:
            return False, None
    return True, SeqTyping(typing.eta + extra, refs)


def sample_contexts(
    lhs: Process,
    rhs: Process,
    typing,
    mode: str,
    n: int = 20,
    seed: int = 0,
) -> list[TypedContext]:
    """Typed static contexts for the pair, at most ``n`` of them, deterministic in ``seed``.

    ``typing`` is a ``SeqTyping`` in the sequential modes, a stack in the
    well-bracketed ones and ``None`` otherwise. The empty context always
    comes first. Mode ``wb-raw`` samples the well-bracketed contexts plus
    servers answering the pair's calls, and plugs without a typing.
    """
    free = lhs.fn | rhs.fn
    names = sorted(
        (x for x in free if x.kind in (NameKind.OUT, NameKind.IN, NameKind.REF)),
        key=lambda x: x.id,
    )
    avoid = {x.id for x in free}
    wb = mode in _WB_MODES

    base = StaticContext()
    hole_typing = typing
    skip: set[str] = set()
    if wb:
        outputs = sum(1 for e in typing if e.tag.value == "o")
        xs = [_fresh(NameKind.OUT, avoid, tag="x") for _ in range(max(outputs, 1))]
        q = _fresh(NameKind.CONT, avoid, tag="q")
        try:
            base, hole_typing = build_forwarder_context(typing, xs, q)
        except DecompositionError:
            logger.debug("stack %s has no forwarder context, sampling bare frames", typing)
        stacked = {e.name.id for e in typing}
        hideable = [a for a in names if a.id not in stacked]
    else:
        if isinstance(typing, SeqTyping) and typing.refs:
            skip = {r.id for r in typing.refs}
        hideable = names

    singles = _frames(names, avoid, skip, wb)
    if mode == "wb-raw":
        singles += _answer_frames(names, avoid, (lhs, rhs))
    candidates: list[tuple[tuple[Process, ...], tuple[Name, ...], str]] = [((), (), "empty")]
    candidates += [((f,), (), label) for f, label in singles]
    candidates += [((), (a,), f"new {a.id}") for a in hideable]
    candidates += [((f1, f2), (), f"{l1} | {l2}") for (f1, l1), (f2, l2) in itertools.combinations(singles, 2)]
    candidates += [((f,), (a,), f"new {a.id}.({label})") for a, (f, label) in itertools.product(hideable, singles)]

    out: list[TypedContext] = []
    for frames, hidden, label in candidates:
        ctx = StaticContext(base.restrictions + hidden, par(base.frame, *frames))
        ok, plugged = _context_typing(mode, hole_typing, frames, ctx, lhs)
        if ok:
            out.append(TypedContext(ctx, plugged, label))
    if len(out) > n:
        rng = random.Random(seed)
        out = out[:1] + sorted(rng.sample(out[1:], n - 1), key=lambda c: c.label)
    logger.debug("sampled %d contexts for %s", len(out), mode)
    return out


def barbed_spotcheck(
    lhs: Process,
    rhs: Process,
    contexts: list[TypedContext],
    mode: str,
    budget: int = 4,
    max_pairs: int = 20_000,
    ctx: StepContext | None = None,
) -> Verdict:
    """Barbed bisimilarity of ``E[lhs]`` and ``E[rhs]`` for every supplied context ``E``."""
    verdicts: list[Verdict] = []
    for i, typed in enumerate(contexts):
        space = StateSpace(budget, ctx=ctx or StepContext())
        game = game_for("ordinary" if mode == "wb-raw" else mode, space, tau_only=True)
        left, right = space.add(plug(typed.ctx, lhs)), space.add(plug(typed.ctx, rhs))
        root = game.node(typed.typing, left, right)

        def consistent(node, game=game) -> bool:
            return game.barbs(node.typing, node.left) == game.barbs(node.typing, node.right)

        engine = Engine(game, max_pairs=max_pairs, consistent=consistent)
        engine.explore([root])
        result = engine.solve()
        outcome = result.outcome(root.key)
        verdict = Verdict(
            mode=f"barbed-{mode}",
            outcome=outcome,
            stats=Stats(pairs=len(result.nodes), states=len(space.states), truncated=result.truncated),
        )
        if outcome is not Outcome.YES and root.key in result.removed:
            verdict.witness = witness_of(result, game, root.key)
            verdict.failures = [
                ChallengeFailure(
                    lhs=typed.label,
                    rhs="",
                    typing=game.typing_key(typed.typing),
                    side="both",
                    action="barbs",
                    reason=f"context {i} separates the pair",
                )
            ]
        verdicts.append(verdict)
    combined = combine(f"barbed-{mode}", verdicts)
    combined.relation_size = len(contexts)
    combined.note = f"{len(contexts)} contexts"
    return combined


__all__ = ["TypedContext", "barbed_spotcheck", "sample_contexts"]
