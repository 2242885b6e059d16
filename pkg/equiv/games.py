"""
Bisimulation games: which challenges a related pair must meet and which
answers the defender may give, for each typed discipline.

Pairs are stepped in a shared name environment (the free names of both
sides plus the base environment), so fresh names chosen by the two sides
for the same action coincide.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

from calculus.lts import TAU, Action, StateSpace, Transition
from calculus.syntax import (
    Input,
    Name,
    NameKind,
    Output,
    Process,
    Res,
    fresh_name,
    par,
)
from discipline.brackets import (
    Stack,
    Tag,
    WbConfig,
    continuation_signature,
    erase,
    evolve_stack,
    is_typed,
    stack_wellformed,
    wb_allowed,
)
from discipline.references import MultipleOutputs, accessible_refs
from discipline.sequential import SeqConfig, barbs, evolve_eta, type_allowed, typecheck_seq

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SeqTyping:
    eta: int
    refs: frozenset[Name] | None = None

    def __str__(self) -> str:
        if self.refs is None:
            return f"eta={self.eta}"
        refs = ",".join(sorted(r.id for r in self.refs)) or "empty"
        return f"eta={self.eta} refs={refs}"


@dataclass(frozen=True)
class Node:
    typing: object
    left: Process
    right: Process
    key: str = field(compare=False, default="")

    @property
    def is_identity(self) -> bool:
        return self.left.key == self.right.key


def _stack_key(stack: Stack) -> str:
    return ",".join(f"{e.name.id}^{e.tag.value}" for e in stack)


class Game:
    """Ordinary asynchronous bisimulation game."""

    mode = "ordinary"

    def __init__(self, space: StateSpace, base_env: frozenset[Name] = frozenset(), tau_only: bool = False):
        self.space = space
        self.base_env = base_env
        self.tau_only = tau_only

    # typing hooks

    def typing_key(self, typing) -> str:
        return ""

    def allowed(self, typing, proc: Process, t: Transition) -> bool:
        return True

    def evolve(self, typing, proc: Process, t: Transition):
        return typing

    def after_tau(self, typing, proc: Process):
        return typing

    def async_compositions(self, typing, q: Process, action: Action) -> list[Process]:
        return [par(q, Output(action.subject, action.objects))]

    def split(self, typing, frame: Process, hole_left: Process, hole_right: Process) -> list:
        return [typing]

    def barbs(self, typing, proc: Process) -> frozenset[str]:
        return barbs(SeqConfig(0, proc), self.space)

    # game

    def node(self, typing, left: Process, right: Process) -> Node:
        return Node(typing, left, right, f"{self.typing_key(typing)}|{left.key}|{right.key}")

    def env(self, node: Node) -> frozenset[Name]:
        return frozenset(node.left.fn | node.right.fn | self.base_env)

    def challenges(self, node: Node, side: int) -> tuple[list[tuple[Transition, object]], bool]:
        """Allowed transitions of one side with the typing they evolve to; flag is False on truncation."""
        p = node.left if side == 0 else node.right
        if self.tau_only:
            moves = self.space.tau_successors(p)
            out = [(t, self.after_tau(node.typing, t.target)) for t in moves]
        else:
            moves = self.space.successors(p, self.env(node))
            out = [(t, self.evolve(node.typing, p, t)) for t in moves if self.allowed(node.typing, p, t)]
        return out, not self.space.is_truncated(p)

    def answers(self, node: Node, side: int, t: Transition, typing) -> tuple[list[Node], bool]:
        q = node.right if side == 0 else node.left
        env = self.env(node)
        targets, complete = self.space.weak(q, TAU if self.tau_only else t.action, env)
        found = {r.key: r for r in targets}
        if t.action.is_input and not self.tau_only:
            for composed in self.async_compositions(node.typing, q, t.action):
                after, ok = self.space.tau_closure(self.space.adopt(composed, q))
                complete = complete and ok
                for r in after:
                    found.setdefault(r.key, r)
        nodes = []
        for k in sorted(found):
            r = found[k]
            nodes.append(self.node(typing, t.target, r) if side == 0 else self.node(typing, r, t.target))
        return nodes, complete


class SeqGame(Game):
    """Challenges restricted to type-allowed transitions; with refs, accessible references are tracked."""

    mode = "seq"

    def typing_key(self, typing: SeqTyping) -> str:
        return str(typing)

    def _config(self, typing: SeqTyping, proc: Process) -> SeqConfig:
        return SeqConfig(typing.eta, proc, typing.refs)

    def allowed(self, typing: SeqTyping, proc: Process, t: Transition) -> bool:
        return bool(type_allowed(self._config(typing, proc), t.action))

    def evolve(self, typing: SeqTyping, proc: Process, t: Transition) -> SeqTyping:
        try:
            c = evolve_eta(self._config(typing, proc), t.action, t.target)
        except MultipleOutputs:
            return typing
        return SeqTyping(c.eta, c.refs)

    def after_tau(self, typing: SeqTyping, proc: Process) -> SeqTyping:
        if typing.refs is None:
            return typing
        try:
            return SeqTyping(typing.eta, accessible_refs(proc))
        except MultipleOutputs:
            return typing

    def split(self, typing: SeqTyping, frame: Process, hole_left: Process, hole_right: Process) -> list:
        eta_frame = typecheck_seq(frame)
        if eta_frame is None:
            return []
        eta = typing.eta - eta_frame
        if eta not in (0, 1) or typecheck_seq(hole_left) != eta or typecheck_seq(hole_right) != eta:
            return []
        if typing.refs is None:
            return [SeqTyping(eta)]
        try:
            refs_left, refs_right = accessible_refs(hole_left), accessible_refs(hole_right)
        except MultipleOutputs:
            return []
        return [SeqTyping(eta, refs_left)] if refs_left == refs_right else []

    def barbs(self, typing: SeqTyping, proc: Process) -> frozenset[str]:
        return barbs(self._config(typing, proc), self.space)


class WbGame(Game):
    """Well-bracketed game: stack-typed challenges and the call/plain input answer clauses."""

    mode = "wb"

    def typing_key(self, typing: Stack) -> str:
        return _stack_key(typing)

    def allowed(self, typing: Stack, proc: Process, t: Transition) -> bool:
        return bool(wb_allowed(WbConfig(typing, proc), t))

    def evolve(self, typing: Stack, proc: Process, t: Transition) -> Stack:
        return evolve_stack(WbConfig(typing, proc), t).stack

    def after_tau(self, typing: Stack, proc: Process) -> Stack:
        s = typing
        if len(s) >= 2 and s[0].name.id == s[1].name.id and s[0].tag is Tag.O and s[1].tag is Tag.I:
            if s[0].name.id not in {n.id for n in proc.fn}:
                return s[2:]
        return s

    def async_compositions(self, typing: Stack, q: Process, action: Action) -> list[Process]:
        subject = action.subject
        if subject.kind is NameKind.CONT:
            return []
        if subject.kind in (NameKind.IN, NameKind.REF):
            return [par(q, Output(subject, action.objects))]
        objects = action.objects
        if not objects or not isinstance(objects[-1], Name) or objects[-1].kind is not NameKind.CONT:
            return []
        cont = objects[-1]
        avoid = {n.id for n in q.fn} | {n.id for n in action.names()} | {e.name.id for e in typing}
        fresh_q = fresh_name(NameKind.CONT, avoid, cont.sort)
        avoid.add(fresh_q.id)
        ys: list[Name] = []
        for kind in continuation_signature(cont, (q,)):
            y = fresh_name(kind, avoid, tag="c")
            avoid.add(y.id)
            ys.append(y)
        relay = Input(fresh_q, tuple(ys), Output(cont, tuple(ys)))
        call = Output(subject, objects[:-1] + (fresh_q,))
        return [par(q, Res(fresh_q, par(call, relay)))]

    def split(self, typing: Stack, frame: Process, hole_left: Process, hole_right: Process) -> list:
        out: list[Stack] = []
        for sides in itertools.product((True, False), repeat=len(typing)):
            hole = tuple(e for e, h in zip(typing, sides) if h)
            rest = tuple(e for e, h in zip(typing, sides) if not h)
            if not (stack_wellformed(hole) and stack_wellformed(rest)):
                continue
            if is_typed(frame, rest) and is_typed(hole_left, hole) and is_typed(hole_right, hole):
                if hole not in out:
                    out.append(hole)
        return out

    def barbs(self, typing: Stack, proc: Process) -> frozenset[str]:
        return barbs(SeqConfig(erase(typing), proc), self.space)


def game_for(mode: str, space: StateSpace, base_env: frozenset[Name] = frozenset(), tau_only: bool = False) -> Game:
    if mode == "ordinary":
        return Game(space, base_env, tau_only)
    if mode in ("seq", "seq-refs"):
        return SeqGame(space, base_env, tau_only)
    if mode in ("wb", "wb-upto"):
        return WbGame(space, base_env, tau_only)
    raise ValueError(f"unknown mode {mode!r}")


__all__ = ["Game", "Node", "SeqGame", "SeqTyping", "WbGame", "game_for"]
