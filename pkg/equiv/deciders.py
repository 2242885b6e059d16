"""Bisimilarity deciders for the ordinary, sequential and well-bracketed disciplines."""

from __future__ import annotations

import logging
import time

from calculus.lts import StateSpace, StepContext
from calculus.syntax import CalculusError, Name, Process, canonical_form
from discipline.brackets import WbConfig, is_clean, make_discreet, typecheck_wb
from discipline.references import accessible_refs
from discipline.sequential import SeqConfig, typecheck_seq
from equiv.engine import Engine, failures_of, witness_of
from equiv.games import Game, Node, SeqGame, SeqTyping, WbGame
from equiv.verdict import Outcome, Stats, Verdict

logger = logging.getLogger(__name__)

DEFAULT_MAX_PAIRS = 20_000


class ConfigurationMismatch(CalculusError):
    """The two configurations of a typed query are not typed alike."""


def decide(game: Game, root: Node, max_pairs: int = DEFAULT_MAX_PAIRS, upto: bool = False) -> Verdict:
    t0 = time.perf_counter()
    engine = Engine(game, max_pairs=max_pairs, upto=upto)
    engine.explore([root])
    result = engine.solve()
    outcome = result.outcome(root.key)
    verdict = Verdict(
        mode=game.mode,
        outcome=outcome,
        relation_size=len(result.alive),
        stats=Stats(
            pairs=len(result.nodes),
            alive=len(result.alive),
            states=len(game.space.states),
            truncated=result.truncated,
            latency_ms=round((time.perf_counter() - t0) * 1000, 1),
        ),
    )
    if outcome is not Outcome.YES and root.key in result.removed:
        verdict.witness = witness_of(result, game, root.key)
        verdict.failures = failures_of(result, game, root.key)
    logger.info(
        "%s bisimilarity: %s (%d pairs, %.0f ms)",
        game.mode,
        outcome.value,
        verdict.stats.pairs,
        verdict.stats.latency_ms,
    )
    return verdict


def _space(budget: int, ctx: StepContext | None) -> StateSpace:
    return StateSpace(budget, ctx=ctx or StepContext())


def bisim_ordinary(
    p: Process,
    q: Process,
    budget: int = 4,
    max_pairs: int = DEFAULT_MAX_PAIRS,
    ctx: StepContext | None = None,
    env: frozenset[Name] = frozenset(),
) -> Verdict:
    space = _space(budget, ctx)
    game = Game(space, env)
    return decide(game, game.node(None, space.add(p), space.add(q)), max_pairs)


def seq_game_root(c1: SeqConfig, c2: SeqConfig, space: StateSpace, env: frozenset[Name] = frozenset()):
    if c1.eta != c2.eta:
        raise ConfigurationMismatch(f"thread indicators differ: {c1.eta} and {c2.eta}")
    for c in (c1, c2):
        eta = typecheck_seq(c.proc)
        if eta != c.eta:
            raise ConfigurationMismatch(f"process is not typed at eta={c.eta}: {c.proc.key}")
    if c1.tracks_refs != c2.tracks_refs:
        raise ConfigurationMismatch("only one configuration tracks references")
    refs = None
    if c1.tracks_refs:
        if {r.id for r in c1.refs} != {r.id for r in c2.refs}:
            raise ConfigurationMismatch("accessible references differ")
        refs = frozenset(c1.refs)
    game = SeqGame(space, env)
    return game, game.node(SeqTyping(c1.eta, refs), space.add(c1.proc), space.add(c2.proc))


def bisim_seq(
    c1: SeqConfig,
    c2: SeqConfig,
    budget: int = 4,
    max_pairs: int = DEFAULT_MAX_PAIRS,
    ctx: StepContext | None = None,
    env: frozenset[Name] = frozenset(),
) -> Verdict:
    game, root = seq_game_root(c1, c2, _space(budget, ctx), env)
    verdict = decide(game, root, max_pairs)
    if c1.tracks_refs:
        verdict.mode = "seq-refs"
    return verdict


def seq_config(p: Process, refs: bool = False) -> SeqConfig:
    """Configuration of ``p`` at its derived thread indicator."""
    eta = typecheck_seq(p)
    if eta is None:
        raise ConfigurationMismatch(f"process is not sequentially typable: {p.key}")
    return SeqConfig(eta, p, accessible_refs(p) if refs else None)


def wb_game_root(c1: WbConfig, c2: WbConfig, space: StateSpace, env: frozenset[Name] = frozenset()):
    if tuple((e.name.id, e.tag) for e in c1.stack) != tuple((e.name.id, e.tag) for e in c2.stack):
        raise ConfigurationMismatch("stacks differ")
    if not is_clean(c1.stack):
        raise ConfigurationMismatch("stack is not clean")
    procs = []
    for c in (c1, c2):
        proc = canonical_form(make_discreet(c.proc))
        result = typecheck_wb(proc, c1.stack)
        if not result:
            raise ConfigurationMismatch(f"process is not typed by the stack: {result.failure}")
        procs.append(space.add(proc))
    game = WbGame(space, env)
    return game, game.node(c1.stack, procs[0], procs[1])


def bisim_wb(
    c1: WbConfig,
    c2: WbConfig,
    budget: int = 4,
    max_pairs: int = DEFAULT_MAX_PAIRS,
    ctx: StepContext | None = None,
    env: frozenset[Name] = frozenset(),
    upto: bool = False,
) -> Verdict:
    game, root = wb_game_root(c1, c2, _space(budget, ctx), env)
    verdict = decide(game, root, max_pairs, upto=upto)
    if upto:
        verdict.mode = "wb-upto"
    return verdict
