"""
Sequentiality: at most one thread of control, owned either by the process
(eta = 1) or by its environment (eta = 0).

``typecheck_seq`` derives the unique eta of a process; ``type_allowed`` and
``evolve_eta`` give the typed transition system the bisimulation games play
on. With reference tracking a configuration also carries the set of
accessible references, which the environment may not input at.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import networkx as nx
from pydantic import BaseModel, Field

from calculus.lts import Action, StateSpace
from calculus.syntax import (
    BudgetExceeded,
    CalculusError,
    Input,
    Match,
    Name,
    NameKind,
    Nil,
    Output,
    Par,
    Process,
    Res,
    Sort,
    Sum,
    Tau,
    canonical_form,
    open_top,
    walk,
)
from discipline.common import ALLOWED, Allowed, TypingFailure, refused
from discipline.references import RefEnv, accessible_refs, refs_constraint

logger = logging.getLogger(__name__)


class SortViolation(CalculusError):
    def __init__(self, location: str, reason: str):
        self.location = location
        super().__init__(f"{reason} in {location}")


# ── Sorting ───────────────────────────────────────────────────────────────────


class Sorting(BaseModel):
    """Carried kinds per subject identifier."""

    sorts: dict[str, tuple[NameKind, ...]] = Field(default_factory=dict)
    wb: bool = False

    def sort_of(self, n: Name) -> Sort | None:
        return self.sorts.get(n.id, n.sort)


def check_sorting(sorting: Sorting, p: Process) -> bool:
    """Raise ``SortViolation`` unless every prefix of ``p`` respects ``sorting``."""
    for node in walk(p):
        if isinstance(node, Output):
            subject, carried = node.subject, tuple(o.kind for o in node.objects)
        elif isinstance(node, Input):
            subject, carried = node.subject, tuple(b.kind for b in node.binders)
        else:
            continue
        if subject.kind is NameKind.VAL:
            raise SortViolation(node.key, f"data value {subject.id} used as a channel")
        expected = sorting.sort_of(subject)
        if expected is not None and carried != expected:
            shown = ", ".join(k.value for k in expected)
            raise SortViolation(node.key, f"{subject.id} carries ({shown})")
        if sorting.wb:
            _check_wb_convention(node.key, subject, carried)
    return True


def _check_wb_convention(location: str, subject: Name, carried: tuple[NameKind, ...]) -> None:
    conts = [i for i, k in enumerate(carried) if k is NameKind.CONT]
    if subject.kind is NameKind.OUT:
        if conts != [len(carried) - 1]:
            raise SortViolation(location, f"{subject.id} must carry exactly one trailing continuation")
    elif conts:
        raise SortViolation(location, f"only output-controlled names carry continuations, not {subject.id}")


# ── Derivations ───────────────────────────────────────────────────────────────


class _Untypable(Exception):
    def __init__(self, rule: str, subterm: Process, reason: str):
        self.failure = TypingFailure(rule=rule, subterm=subterm.key, reason=reason)


def _eta(p: Process) -> int:
    if isinstance(p, Nil):
        return 0
    if isinstance(p, Output):
        if p.subject.kind is NameKind.VAL:
            raise _Untypable("Out", p, "data value used as a channel")
        return 1 if p.subject.kind.output_controlled else 0
    if isinstance(p, Input):
        if p.subject.kind is NameKind.VAL:
            raise _Untypable("Inp", p, "data value used as a channel")
        if p.replicated and p.subject.kind.input_controlled:
            raise _Untypable("Rep", p, "replicated input at an input-controlled name")
        if _eta(p.body) != 1:
            raise _Untypable("Inp", p, "an input must hand the thread to its continuation")
        return 1 if p.subject.kind.input_controlled and not p.replicated else 0
    if isinstance(p, Par):
        total = sum(_eta(q) for q in p.parts)
        if total > 1:
            raise _Untypable("Par", p, "more than one active thread")
        return total
    if isinstance(p, (Res, Tau)):
        return _eta(p.body)
    if isinstance(p, Match):
        if _eta(p.body) != 0:
            raise _Untypable("Mat", p, "a match guard must be inactive")
        return 0
    if isinstance(p, Sum):
        etas = {_eta(b) for b in p.branches}
        if len(etas) != 1:
            raise _Untypable("Sum", p, "summands disagree on the thread")
        return etas.pop()
    raise TypeError(f"unexpected process node {type(p).__name__}")


def seq_derivation(p: Process) -> int | TypingFailure:
    """The eta of ``p``, or the first rule that fails."""
    try:
        return _eta(p)
    except _Untypable as exc:
        return exc.failure


def typecheck_seq(p: Process) -> int | None:
    result = seq_derivation(p)
    return result if isinstance(result, int) else None


# ── Typed transitions ─────────────────────────────────────────────────────────


@dataclass(frozen=True)
class SeqConfig:
    eta: int
    proc: Process
    refs: frozenset[Name] | None = None

    @property
    def tracks_refs(self) -> bool:
        return self.refs is not None


def type_allowed(config: SeqConfig, action: Action) -> Allowed:
    """Whether the environment may observe ``action`` from ``config``."""
    if action.is_tau:
        return ALLOWED
    subject = action.subject
    if config.tracks_refs:
        if action.is_output and subject.kind is NameKind.REF:
            return refused(f"output at reference {subject.id} stays internal")
        verdict = refs_constraint(RefEnv(config.refs), action)
        if not verdict:
            return verdict
    if config.eta == 0:
        return ALLOWED
    if action.is_input and subject.kind.input_controlled:
        return ALLOWED
    if action.is_output and subject.kind.output_controlled:
        return ALLOWED
    return refused(f"{action.key} needs the thread the process owns")


def evolve_eta(config: SeqConfig, action: Action, target: Process) -> SeqConfig:
    eta = config.eta
    if not action.is_tau and action.subject.kind.output_controlled:
        eta = 1 if action.is_input else 0
    refs = accessible_refs(target) if config.tracks_refs else None
    return SeqConfig(eta, target, refs)


def barbs(config: SeqConfig, space: StateSpace | None = None, strict: bool = False) -> frozenset[str]:
    """Subjects of the type-allowed outputs reachable through tau steps."""
    space = space or StateSpace()
    states, complete = space.tau_closure(space.add(config.proc))
    if strict and not complete:
        raise BudgetExceeded("barbs need more replication unfoldings than the budget")
    found: set[str] = set()
    for q in states:
        for t in space.successors(q):
            if t.action.is_output and type_allowed(SeqConfig(config.eta, q, config.refs), t.action):
                found.add(t.action.subject.id)
    return frozenset(found)


# ── Structural properties ─────────────────────────────────────────────────────


def _redexes(p: Process) -> list[frozenset[int]]:
    _, comps = open_top(canonical_form(p))
    outputs: list[tuple[int, str]] = []
    inputs: list[tuple[int, str]] = []
    for i, c in enumerate(comps):
        for prefix in _prefixes(c):
            if isinstance(prefix, Output):
                outputs.append((i, prefix.subject.id))
            elif isinstance(prefix, Input):
                inputs.append((i, prefix.subject.id))
    return [
        frozenset({i, j}) for (i, a), (j, b) in itertools.product(outputs, inputs) if a == b and i != j
    ]


def _prefixes(c: Process):
    if isinstance(c, (Output, Input)):
        yield c
    elif isinstance(c, Match) and c.left.id == c.right.id:
        yield from _prefixes(c.body)
    elif isinstance(c, Sum):
        for b in c.branches:
            yield from _prefixes(b)


def no_disjoint_interactions(p: Process) -> bool:
    """No two communications of ``p`` can fire in disjoint parallel components."""
    redexes = _redexes(p)
    return not any(a.isdisjoint(b) for a, b in itertools.combinations(redexes, 2))


def inactive_has_no_interaction(p: Process) -> bool:
    return typecheck_seq(p) != 0 or not _redexes(p)


def inactive_quiesces(p: Process, budget: int = 2) -> bool:
    """An inactive process has no infinite run of internal steps within the budget."""
    if typecheck_seq(p) != 0:
        return True
    space = StateSpace(budget)
    root = space.add(p)
    g = nx.DiGraph()
    g.add_node(root.key)
    frontier = [root]
    while frontier:
        q = frontier.pop()
        for t in space.tau_successors(q):
            if t.target.key not in g:
                frontier.append(t.target)
            g.add_edge(q.key, t.target.key)
    try:
        nx.find_cycle(g)
    except nx.NetworkXNoCycle:
        return True
    return False


__all__ = [
    "SeqConfig",
    "SortViolation",
    "Sorting",
    "barbs",
    "check_sorting",
    "evolve_eta",
    "inactive_has_no_interaction",
    "inactive_quiesces",
    "no_disjoint_interactions",
    "seq_derivation",
    "type_allowed",
    "typecheck_seq",
]
