"""
Early asynchronous labelled transition system.

``step`` computes every strong transition of a canonical process; inputs are
instantiated over the known names (free names of the process and of the
environment) plus fresh names, so branching stays finite. ``StateSpace``
explores lazily under a replication budget: a replicated input firing counts
as one unfolding and states first reached beyond the budget are dropped,
marking their source as truncated.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator

import networkx as nx

from calculus.syntax import (
    NIL,
    BudgetExceeded,
    Input,
    Match,
    Name,
    NameKind,
    Output,
    Process,
    Sum,
    Tau,
    canonical_form,
    fresh_name,
    open_top,
    par,
    rename,
    restrict,
    substitute,
)

logger = logging.getLogger(__name__)

# ── Actions and transitions ───────────────────────────────────────────────────


@dataclass(frozen=True)
class Action:
    kind: str  # "tau" | "in" | "out"
    subject: Name | None = None
    objects: tuple = ()
    extruded: tuple[Name, ...] = ()

    @classmethod
    def tau(cls) -> Action:
        return cls("tau")

    @property
    def is_tau(self) -> bool:
        return self.kind == "tau"

    @property
    def is_input(self) -> bool:
        return self.kind == "in"

    @property
    def is_output(self) -> bool:
        return self.kind == "out"

    @property
    def key(self) -> str:
        if self.kind == "tau":
            return "tau"
        objs = ",".join(o.id for o in self.objects)
        if self.kind == "in":
            return f"{self.subject.id}({objs})"
        bound = f"new {','.join(e.id for e in self.extruded)}. " if self.extruded else ""
        return f"{bound}{self.subject.id}<{objs}>"

    def names(self) -> frozenset[Name]:
        out = {o for o in self.objects if isinstance(o, Name) and not o.is_literal}
        if self.subject is not None:
            out.add(self.subject)
        return frozenset(out)

    def __str__(self) -> str:
        return self.key


TAU = Action.tau()


@dataclass(frozen=True)
class Transition:
    source: Process
    action: Action
    target: Process
    unfolds: int = 0


@dataclass(frozen=True)
class StepContext:
    """Instantiation policy for input objects."""

    domain: tuple[Name, ...] = ()
    fresh_per_position: int = 1


DEFAULT_CONTEXT = StepContext()


# ── Strong transitions ────────────────────────────────────────────────────────


@dataclass(frozen=True)
class _Commit:
    kind: str
    subject: Name | None
    payload: tuple
    body: Process
    replicated: bool = False


def _commitments(c: Process) -> Iterator[_Commit]:
    if isinstance(c, Output):
        yield _Commit("out", c.subject, c.objects, NIL)
    elif isinstance(c, Input):
        yield _Commit("in", c.subject, c.binders, c.body, c.replicated)
    elif isinstance(c, Tau):
        yield _Commit("tau", None, (), c.body)
    elif isinstance(c, Match):
        if c.left.id == c.right.id:
            yield from _commitments(c.body)
    elif isinstance(c, Sum):
        for branch in c.branches:
            yield from _commitments(branch)


def _fire(comps: tuple[Process, ...], i: int, commit: _Commit, instance: Process) -> list[Process]:
    rest = list(comps)
    if commit.replicated:
        rest.append(instance)
    else:
        rest[i] = instance
    return rest


def _compatible(name: Name, binder: Name) -> bool:
    if name.kind is not binder.kind:
        return False
    return name.sort is None or binder.sort is None or name.sort == binder.sort


def _instantiations(
    binders: tuple[Name, ...],
    known: frozenset[Name],
    avoid: set[str],
    ctx: StepContext,
) -> Iterator[tuple[Name, ...]]:
    def go(k: int, chosen: tuple[Name, ...], used: set[str]) -> Iterator[tuple[Name, ...]]:
        if k == len(binders):
            yield chosen
            return
        b = binders[k]
        earlier_fresh = [n for n in chosen if n.id.startswith("_") and _compatible(n, b)]
        if b.kind is NameKind.VAL and (ctx.domain or any(n.kind is NameKind.VAL for n in known)):
            candidates = list(ctx.domain) + sorted(
                (n for n in known if n.kind is NameKind.VAL and not n.is_literal), key=lambda n: n.id
            )
        else:
            candidates = []
            if b.kind is not NameKind.CONT:
                candidates = sorted((n for n in known if _compatible(n, b)), key=lambda n: n.id)
                candidates += [n for n in earlier_fresh if n not in candidates]
            fresh_used = set(used)
            for _ in range(ctx.fresh_per_position):
                f = fresh_name(b.kind, fresh_used, b.sort)
                fresh_used.add(f.id)
                candidates.append(f)
        for cand in candidates:
            yield from go(k + 1, chosen + (cand,), used | {cand.id})

    yield from go(0, (), set(avoid))


def step(
    p: Process,
    env_names: frozenset[Name] = frozenset(),
    ctx: StepContext = DEFAULT_CONTEXT,
    visible: bool = True,
) -> list[Transition]:
    """All strong transitions of ``p``; targets are canonical."""
    p = canonical_form(p)
    restricted, comps = open_top(p)
    bound = {b.id for b in restricted}
    known = frozenset(n for n in (p.fn | env_names) if not n.is_literal)
    avoid = {n.id for n in known} | {b.id for b in restricted}
    out: list[Transition] = []

    def emit(action: Action, new_comps: list[Process], binders, unfolds: int, mapping=None) -> None:
        body = par(*new_comps)
        if mapping:
            body = rename(body, mapping)
        target = canonical_form(restrict(tuple(binders), body))
        out.append(Transition(p, action, target, unfolds))

    commits = [(i, c) for i, comp in enumerate(comps) for c in _commitments(comp)]
    for i, c in commits:
        if c.kind == "tau":
            emit(TAU, _fire(comps, i, c, c.body), restricted, 0)
        elif c.kind == "out":
            for j, d in commits:
                if j == i or d.kind != "in" or d.subject.id != c.subject.id:
                    continue
                if len(d.payload) != len(c.payload):
                    continue
                if any(o.kind is not b.kind for o, b in zip(c.payload, d.payload)):
                    continue
                instance = substitute(d.body, list(c.payload), list(d.payload))
                new = _fire(comps, j, d, instance)
                new[i] = NIL
                emit(TAU, new, restricted, 1 if d.replicated else 0)
            if visible and c.subject.id not in bound:
                extruded: list[Name] = []
                for o in c.payload:
                    if isinstance(o, Name) and o.id in bound and o not in extruded:
                        extruded.append(o)
                mapping: dict[Name, Name] = {}
                taken = set(avoid)
                for e in extruded:
                    f = fresh_name(e.kind, taken, e.sort)
                    taken.add(f.id)
                    mapping[e] = f
                objs = tuple(mapping.get(o, o) if isinstance(o, Name) else o for o in c.payload)
                action = Action("out", c.subject, objs, tuple(mapping[e] for e in extruded))
                new = list(comps)
                new[i] = NIL
                remaining = [b for b in restricted if b not in mapping]
                emit(action, new, remaining, 0, mapping)
        elif c.kind == "in" and visible and c.subject.id not in bound:
            for inst in _instantiations(c.payload, known, avoid, ctx):
                instance = substitute(c.body, list(inst), list(c.payload))
                emit(
                    Action("in", c.subject, inst),
                    _fire(comps, i, c, instance),
                    restricted,
                    1 if c.replicated else 0,
                )
    out.sort(key=lambda t: (t.action.key, t.target.key))
    return out


def is_deterministic_step(p: Process) -> Process | None:
    """The unique tau-successor of ``p`` when tau is its only transition class."""
    transitions = step(p)
    if not transitions or any(not t.action.is_tau for t in transitions):
        return None
    keys = {t.target.key for t in transitions}
    if len(keys) != 1:
        return None
    return transitions[0].target


def deterministic_reductions(p: Process, limit: int = 16) -> list[Process]:
    """``p`` followed by the chain of its deterministic reductions."""
    chain = [canonical_form(p)]
    seen = {chain[0].key}
    while len(chain) <= limit:
        nxt = is_deterministic_step(chain[-1])
        if nxt is None or nxt.key in seen:
            break
        seen.add(nxt.key)
        chain.append(nxt)
    return chain


# ── Lazy state space ──────────────────────────────────────────────────────────


class StateSpace:
    """Budget-aware successor cache shared by explorations and equivalence games."""

    def __init__(
        self,
        budget: int = 4,
        env_names: frozenset[Name] = frozenset(),
        ctx: StepContext = DEFAULT_CONTEXT,
    ):
        self.budget = budget
        self.env_names = env_names
        self.ctx = ctx
        self.states: dict[str, Process] = {}
        self.depth: dict[str, int] = {}
        self.truncated: set[str] = set()
        self._raw: dict[tuple[str, frozenset[Name]], list[Transition]] = {}
        self._raw_tau: dict[str, list[Transition]] = {}
        self._tau_closure: dict[str, tuple[tuple[str, ...], bool]] = {}

    def add(self, p: Process, depth: int = 0) -> Process:
        p = canonical_form(p)
        self._register(p, depth)
        return p

    def adopt(self, p: Process, parent: Process) -> Process:
        """Register ``p`` (built from ``parent`` by composition) at the parent's depth."""
        p = canonical_form(p)
        self._register(p, self.depth.get(parent.key, 0))
        return p

    def _register(self, p: Process, depth: int) -> None:
        k = p.key
        old = self.depth.get(k)
        if old is None:
            self.states[k] = p
            self.depth[k] = depth
        elif depth < old:
            self.depth[k] = depth
            if k in self.truncated:
                self.truncated.discard(k)
                self._tau_closure.clear()

    def _filter(self, p: Process, raw: list[Transition]) -> list[Transition]:
        d = self.depth.get(p.key)
        if d is None:
            self._register(p, 0)
            d = 0
        kept: list[Transition] = []
        for t in raw:
            nd = d + t.unfolds
            if t.unfolds and nd > self.budget and t.target.key not in self.depth:
                self.truncated.add(p.key)
                continue
            self._register(t.target, min(nd, self.budget + 1))
            kept.append(t)
        return kept

    def successors(self, p: Process, env: frozenset[Name] | None = None) -> list[Transition]:
        env = self.env_names if env is None else env
        cache_key = (p.key, env)
        raw = self._raw.get(cache_key)
        if raw is None:
            raw = step(p, env, self.ctx)
            self._raw[cache_key] = raw
        return self._filter(p, raw)

    def tau_successors(self, p: Process) -> list[Transition]:
        raw = self._raw_tau.get(p.key)
        if raw is None:
            raw = step(p, frozenset(), self.ctx, visible=False)
            self._raw_tau[p.key] = raw
        return self._filter(p, raw)

    def tau_closure(self, p: Process) -> tuple[list[Process], bool]:
        """Reflexive-transitive tau closure and whether it stayed clear of truncated states."""
        cached = self._tau_closure.get(p.key)
        if cached is not None:
            keys, complete = cached
            return [self.states[k] for k in keys], complete
        seen = {p.key: p}
        queue = deque([p])
        complete = True
        while queue:
            q = queue.popleft()
            for t in self.tau_successors(q):
                if t.target.key not in seen:
                    seen[t.target.key] = t.target
                    queue.append(t.target)
            if q.key in self.truncated:
                complete = False
        keys = tuple(sorted(seen))
        self._tau_closure[p.key] = (keys, complete)
        return [seen[k] for k in keys], complete

    def weak(self, p: Process, action: Action, env: frozenset[Name] | None = None) -> tuple[list[Process], bool]:
        """Targets of ``p ==action==>`` (the empty move included for tau)."""
        before, complete = self.tau_closure(p)
        if action.is_tau:
            return before, complete
        found: dict[str, Process] = {}
        for q in before:
            for t in self.successors(q, env):
                if t.action == action:
                    after, ok = self.tau_closure(t.target)
                    complete = complete and ok
                    for r in after:
                        found.setdefault(r.key, r)
            if q.key in self.truncated:
                complete = False
        return [found[k] for k in sorted(found)], complete

    def is_truncated(self, p: Process) -> bool:
        return p.key in self.truncated


# ── Reachable graphs ──────────────────────────────────────────────────────────


@dataclass(frozen=True)
class StateGraph:
    root: str
    states: dict[str, Process]
    edges: tuple[Transition, ...]
    budget: int
    truncated: frozenset[str] = field(default_factory=frozenset)

    def __len__(self) -> int:
        return len(self.states)

    def out_edges(self, key: str) -> list[Transition]:
        return [t for t in self.edges if t.source.key == key]

    def to_networkx(self) -> nx.MultiDiGraph:
        from calculus.parser import render

        g = nx.MultiDiGraph(budget=self.budget, root=self.root)
        for k, p in self.states.items():
            g.add_node(k, process=render(p), truncated=k in self.truncated)
        for t in self.edges:
            g.add_edge(t.source.key, t.target.key, action=t.action.key, unfolds=t.unfolds)
        return g

    def has_tau_cycle(self) -> bool:
        g = nx.DiGraph()
        g.add_nodes_from(self.states)
        g.add_edges_from((t.source.key, t.target.key) for t in self.edges if t.action.is_tau)
        try:
            nx.find_cycle(g)
        except nx.NetworkXNoCycle:
            return False
        return True


def explore(
    p: Process,
    budget: int = 4,
    env_names: frozenset[Name] = frozenset(),
    ctx: StepContext = DEFAULT_CONTEXT,
    max_states: int = 50_000,
) -> StateGraph:
    """Reachable canonical states of ``p`` under the replication budget."""
    space = StateSpace(budget, env_names, ctx)
    root = space.add(p)
    env = frozenset(root.fn | env_names)
    # 0-1 BFS: replication firings cost one unfolding, everything else is free
    queue: deque[Process] = deque([root])
    expanded: set[str] = set()
    edges: list[Transition] = []
    while queue:
        q = queue.popleft()
        if q.key in expanded:
            continue
        if len(expanded) >= max_states:
            space.truncated.add(q.key)
            continue
        expanded.add(q.key)
        for t in space.successors(q, env):
            edges.append(t)
            if t.target.key not in expanded:
                if t.unfolds:
                    queue.append(t.target)
                else:
                    queue.appendleft(t.target)
    states = {k: space.states[k] for k in sorted(expanded)}
    kept = tuple(t for t in edges if t.target.key in states)
    truncated = frozenset(k for k in space.truncated if k in states)
    logger.debug("explored %d states, %d edges, %d truncated", len(states), len(kept), len(truncated))
    return StateGraph(root.key, states, kept, budget, truncated)


def weak_closure(g: StateGraph, frm: Process | str, strict: bool = True) -> set[tuple[Action, str]]:
    """Every ``(action, target)`` with ``frm ==action==> target`` inside ``g``."""
    start = frm if isinstance(frm, str) else canonical_form(frm).key
    if start not in g.states:
        raise KeyError(f"state not in graph: {start}")
    out_by_state: dict[str, list[Transition]] = {}
    for t in g.edges:
        out_by_state.setdefault(t.source.key, []).append(t)

    def tau_star(k: str) -> set[str]:
        seen = {k}
        queue = deque([k])
        while queue:
            s = queue.popleft()
            if strict and s in g.truncated:
                raise BudgetExceeded(f"weak closure reaches a truncated state (budget {g.budget})")
            for t in out_by_state.get(s, []):
                if t.action.is_tau and t.target.key not in seen:
                    seen.add(t.target.key)
                    queue.append(t.target.key)
        return seen

    result: set[tuple[Action, str]] = set()
    before = tau_star(start)
    result.update((TAU, k) for k in before)
    for s in before:
        for t in out_by_state.get(s, []):
            if not t.action.is_tau:
                result.update((t.action, k) for k in tau_star(t.target.key))
    return result


def dump_graph(g: StateGraph) -> str:
    """Edges as ``id TAB action TAB id`` followed by the state table."""
    from calculus.parser import render

    ids = {k: f"s{i}" for i, k in enumerate(_bfs_order(g))}
    lines = [f"{ids[t.source.key]}\t{t.action.key}\t{ids[t.target.key]}" for t in g.edges]
    lines.append("")
    for k, sid in ids.items():
        mark = "\t[truncated]" if k in g.truncated else ""
        lines.append(f"{sid}\t{render(g.states[k])}{mark}")
    return "\n".join(lines) + "\n"


def _bfs_order(g: StateGraph) -> list[str]:
    order = [g.root]
    seen = {g.root}
    i = 0
    while i < len(order):
        for t in g.edges:
            if t.source.key == order[i] and t.target.key not in seen:
                seen.add(t.target.key)
                order.append(t.target.key)
        i += 1
    order.extend(k for k in sorted(g.states) if k not in seen)
    return order


__all__ = [
    "TAU",
    "Action",
    "StateGraph",
    "StateSpace",
    "StepContext",
    "Transition",
    "deterministic_reductions",
    "dump_graph",
    "explore",
    "is_deterministic_step",
    "step",
    "weak_closure",
]
