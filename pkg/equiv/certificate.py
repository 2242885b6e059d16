"""
Certificate checking: does a written relation close under the bisimulation
game of its mode?

Each triple is type-checked, then its obligations are computed; a candidate
answer counts only if it lands on a listed triple (or an identity pair when
the relation includes ``identity``), possibly after deterministic reductions
and static-context stripping in ``wb-upto`` mode. Relations marked
``saturate`` are only partially written down: their triples seed an open
exploration of everything reachable instead.
"""

from __future__ import annotations

import asyncio
import logging
import time

from calculus.lts import StateSpace, StepContext
from calculus.parser import RelationCert, RelationTriple, render, render_stack
from calculus.syntax import Name, canonical_form
from discipline.brackets import make_discreet, typecheck_wb
from discipline.references import MultipleOutputs, accessible_refs
from discipline.sequential import typecheck_seq
from equiv.engine import Engine, EngineResult, failures_of
from equiv.games import Game, Node, SeqTyping, game_for
from equiv.verdict import ChallengeFailure, Outcome, Stats, Verdict

logger = logging.getLogger(__name__)


def _typing_error(triple: RelationTriple, index: int, reason: str) -> ChallengeFailure:
    return ChallengeFailure(
        lhs=render(triple.lhs),
        rhs=render(triple.rhs),
        typing="",
        side="both",
        action="typing",
        reason=reason,
        triple=index,
    )


def _root(cert: RelationCert, mode: str, game: Game, triple: RelationTriple, index: int) -> Node | ChallengeFailure:
    """Typed root pair of a triple, or the reason it is ill-typed."""
    lhs, rhs = triple.lhs, triple.rhs
    if mode in ("seq", "seq-refs"):
        eta = triple.eta
        if eta is None:
            eta = typecheck_seq(lhs)
        if eta is None or typecheck_seq(lhs) != eta or typecheck_seq(rhs) != eta:
            return _typing_error(triple, index, f"sides are not both typed at eta={eta}")
        refs = None
        if mode == "seq-refs":
            try:
                left_refs, right_refs = accessible_refs(lhs), accessible_refs(rhs)
            except MultipleOutputs as exc:
                return _typing_error(triple, index, str(exc))
            declared = {r.id for r in triple.refs} if triple.refs is not None else {r.id for r in left_refs}
            if {r.id for r in left_refs} != declared or {r.id for r in right_refs} != declared:
                return _typing_error(triple, index, "accessible references differ from the declared set")
            refs = left_refs
        return game.node(SeqTyping(eta, refs), game.space.add(lhs), game.space.add(rhs))
    if mode in ("wb", "wb-upto"):
        stack = triple.stack or ()
        lhs, rhs = canonical_form(make_discreet(lhs)), canonical_form(make_discreet(rhs))
        for side in (lhs, rhs):
            result = typecheck_wb(side, stack)
            if not result:
                return _typing_error(triple, index, f"not typed by {render_stack(stack)}: {result.failure}")
        return game.node(stack, game.space.add(lhs), game.space.add(rhs))
    return game.node(None, game.space.add(lhs), game.space.add(rhs))


def _verdict(
    cert: RelationCert,
    mode: str,
    game: Game,
    roots: list[Node],
    result: EngineResult,
    ill_typed: list[ChallengeFailure],
    t0: float,
) -> Verdict:
    failures = list(ill_typed)
    outcomes = []
    for i, root in enumerate(roots):
        outcomes.append(result.outcome(root.key))
        if root.key not in result.alive:
            failures.extend(failures_of(result, game, root.key, triple=i))
    if ill_typed or any(o is Outcome.NO for o in outcomes):
        outcome = Outcome.NO
    elif any(o is Outcome.BOUNDED for o in outcomes):
        outcome = Outcome.BOUNDED
    else:
        outcome = Outcome.YES
    verdict = Verdict(
        mode=mode,
        outcome=outcome,
        failures=failures,
        relation_size=len(roots),
        stats=Stats(
            pairs=len(result.nodes),
            alive=len(result.alive),
            states=len(game.space.states),
            truncated=result.truncated,
            latency_ms=round((time.perf_counter() - t0) * 1000, 1),
        ),
    )
    logger.info("certificate %s (%s): %s, %d failures", cert.name, mode, outcome.value, len(failures))
    return verdict


def _prepare(cert: RelationCert, mode: str, budget: int, ctx: StepContext | None, env: frozenset[Name]):
    space = StateSpace(budget, ctx=ctx or StepContext())
    game = game_for(mode, space, env)
    roots: list[Node] = []
    ill_typed: list[ChallengeFailure] = []
    for i, triple in enumerate(cert.triples):
        root = _root(cert, mode, game, triple, i)
        if isinstance(root, ChallengeFailure):
            ill_typed.append(root)
        else:
            roots.append(root)
    return game, roots, ill_typed


def check_certificate(
    cert: RelationCert,
    budget: int = 4,
    max_pairs: int = 20_000,
    ctx: StepContext | None = None,
    env: frozenset[Name] = frozenset(),
    mode: str | None = None,
) -> Verdict:
    """Check that ``cert`` is a bisimulation of its mode (``mode`` overrides it)."""
    t0 = time.perf_counter()
    mode = mode or cert.mode
    game, roots, ill_typed = _prepare(cert, mode, budget, ctx, env)
    upto = mode == "wb-upto"
    if cert.saturate:
        engine = Engine(game, max_pairs=max_pairs, upto=upto)
        engine.explore(roots)
    else:
        engine = Engine(game, max_pairs=max_pairs, upto=upto, relation={r.key for r in roots}, identity=cert.identity)
        for root in roots:
            engine.expand_one(root)
    return _verdict(cert, mode, game, roots, engine.solve(), ill_typed, t0)


async def acheck_certificate(
    cert: RelationCert,
    budget: int = 4,
    max_pairs: int = 20_000,
    ctx: StepContext | None = None,
    env: frozenset[Name] = frozenset(),
    mode: str | None = None,
) -> Verdict:
    """Like ``check_certificate``, computing the obligations of the triples concurrently.

    Each triple is expanded in a worker thread over its own state space, so
    fresh-name choices stay independent of scheduling.
    """
    t0 = time.perf_counter()
    mode = mode or cert.mode
    if cert.saturate:
        return await asyncio.to_thread(check_certificate, cert, budget, max_pairs, ctx, env, mode)
    game, roots, ill_typed = _prepare(cert, mode, budget, ctx, env)
    relation = {r.key for r in roots}
    upto = mode == "wb-upto"

    def expand(root: Node) -> Engine:
        own = game_for(mode, StateSpace(budget, ctx=ctx or StepContext()), env)
        engine = Engine(own, max_pairs=max_pairs, upto=upto, relation=relation, identity=cert.identity)
        engine.expand_one(root)
        return engine

    partial = await asyncio.gather(*[asyncio.to_thread(expand, r) for r in roots])
    merged = Engine(game, max_pairs=max_pairs, upto=upto, relation=relation, identity=cert.identity)
    for engine in partial:
        merged.nodes.update(engine.nodes)
        merged.obligations.update(engine.obligations)
        merged.identities |= engine.identities
        merged.inconsistent |= engine.inconsistent
        merged.unexplored |= engine.unexplored
        merged.truncated = merged.truncated or engine.truncated
        merged.missing_challenges = merged.missing_challenges or engine.missing_challenges
    return _verdict(cert, mode, game, roots, merged.solve(), ill_typed, t0)
