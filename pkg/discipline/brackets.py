"""
Well-bracketing: continuation names are used in a stack-like discipline.

A typing is a stack of continuation names tagged ``o`` (the process owns
the output capability, i.e. it must eventually answer) or ``i`` (it owns
the input capability, i.e. it is waiting for an answer). Calls are outputs
``x<a,p>`` carrying exactly one trailing continuation; answers are outputs
``p<a>`` at a continuation.
"""

from __future__ import annotations

import itertools
import logging
import threading
from dataclasses import dataclass
from enum import Enum

from calculus.lts import Action, Transition
from calculus.syntax import (
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
    StaticContext,
    Sum,
    Tau,
    all_names,
    fresh_name,
    par,
    rename,
    walk,
)
from discipline.common import ALLOWED, Allowed, TypingFailure, refused
from discipline.sequential import SeqConfig, type_allowed

logger = logging.getLogger(__name__)


class DecompositionError(CalculusError):
    pass


# ── Stacks ────────────────────────────────────────────────────────────────────


class Tag(str, Enum):
    O = "o"
    I = "i"  # noqa: E741


@dataclass(frozen=True)
class StackEntry:
    name: Name
    tag: Tag

    def __str__(self) -> str:
        return f"{self.name.id}^{self.tag.value}"


Stack = tuple[StackEntry, ...]


def stack_wellformed(stack: Stack) -> bool:
    """Alternating tags ending in ``o``; a name twice only as ``p^o`` directly above ``p^i``."""
    if not stack:
        return True
    if stack[-1].tag is not Tag.O:
        return False
    seen: dict[tuple[str, Tag], int] = {}
    for i, e in enumerate(stack):
        if i and stack[i - 1].tag is e.tag:
            return False
        if (e.name.id, e.tag) in seen:
            return False
        seen[(e.name.id, e.tag)] = i
    for (ident, tag), i in seen.items():
        if tag is Tag.I and (ident, Tag.O) in seen and seen[(ident, Tag.O)] != i - 1:
            return False
    return True


def _alternates(prefix: Stack) -> bool:
    return len(prefix) < 2 or prefix[-1].tag is not prefix[-2].tag


def interleave(left: Stack, right: Stack) -> set[Stack]:
    """Well-formed shuffles of two stacks."""
    out: set[Stack] = set()

    def go(i: int, j: int, acc: Stack) -> None:
        if not _alternates(acc):
            return
        if i == len(left) and j == len(right):
            if stack_wellformed(acc):
                out.add(acc)
            return
        if i < len(left):
            go(i + 1, j, acc + (left[i],))
        if j < len(right):
            go(i, j + 1, acc + (right[j],))

    go(0, 0, ())
    return out


def stack_names(stack: Stack) -> set[str]:
    return {e.name.id for e in stack}


def erase(stack: Stack) -> int:
    return 1 if stack and stack[0].tag is Tag.O else 0


def is_clean(stack: Stack) -> bool:
    return len(stack_names(stack)) == len(stack)


# ── Type checking ─────────────────────────────────────────────────────────────


def _conts(names) -> list[Name]:
    return [n for n in names if isinstance(n, Name) and n.kind is NameKind.CONT]


def _no_inputs(stack: Stack) -> bool:
    return len(stack) <= 1 and all(e.tag is Tag.O for e in stack)


class _Checker:
    """Memoised search for a derivation of ``stack |- process``."""

    def __init__(self) -> None:
        self.memo: dict[tuple[str, Stack], bool] = {}
        self.failure: TypingFailure | None = None

    def fail(self, rule: str, p: Process, reason: str) -> bool:
        if self.failure is None:
            self.failure = TypingFailure(rule=rule, subterm=p.key, reason=reason)
        return False

    def check(self, p: Process, stack: Stack) -> bool:
        key = (p.key, tuple((e.name.id, e.tag) for e in stack))
        cached = self.memo.get(key)
        if cached is None:
            self.memo[key] = False
            cached = self._derive(p, stack)
            self.memo[key] = cached
        return cached

    def _derive(self, p: Process, s: Stack) -> bool:
        if isinstance(p, Nil):
            return not s or self.fail("Nil", p, "an inert process has an empty stack")
        if isinstance(p, Output):
            return self._output(p, s)
        if isinstance(p, Input):
            return self._input(p, s)
        if isinstance(p, Par):
            return self._par(p, list(p.parts), s)
        if isinstance(p, Res):
            return self._res(p, s)
        if isinstance(p, Tau):
            if not _no_inputs(s):
                return self.fail("Tau", p, "a tau prefix cannot hold pending answers")
            return self.check(p.body, s)
        if isinstance(p, Sum):
            if not _no_inputs(s):
                return self.fail("Sum", p, "a choice cannot hold pending answers")
            return all(self.check(b, s) for b in p.branches)
        if isinstance(p, Match):
            if s:
                return self.fail("Mat", p, "a match must have an empty stack")
            if _conts(all_names(p)):
                return self.fail("Mat", p, "continuation names may not occur under a match")
            return self.check(p.body, ())
        raise TypeError(f"unexpected process node {type(p).__name__}")

    def _output(self, p: Output, s: Stack) -> bool:
        conts = _conts(p.objects)
        a = p.subject
        if a.kind is NameKind.CONT:
            if conts:
                return self.fail("Out-answer", p, "answers carry no continuation")
            if not _same(s, ((a, Tag.O),)):
                return self.fail("Out-answer", p, f"stack must be {a.id}^o")
            return True
        if a.kind is NameKind.OUT:
            if len(conts) != 1 or p.objects[-1] != conts[0]:
                return self.fail("Out-call", p, "a call carries exactly one trailing continuation")
            if not _same(s, ((conts[0], Tag.O),)):
                return self.fail("Out-call", p, f"stack must be {conts[0].id}^o")
            return True
        if conts:
            return self.fail("Out-plain", p, "continuations may only be passed in calls")
        return not s or self.fail("Out-plain", p, "stack must be empty")

    def _input(self, p: Input, s: Stack) -> bool:
        a = p.subject
        conts = _conts(p.binders)
        if a.kind is NameKind.OUT:
            if len(conts) != 1 or p.binders[-1] != conts[0]:
                return self.fail("Inp-call", p, "a call receives exactly one trailing continuation")
            if s:
                return self.fail("Inp-call", p, "a call receiver has an empty stack")
            return self.check(p.body, (StackEntry(conts[0], Tag.O),))
        if p.replicated:
            return self.fail("Inp-call", p, "only calls may be replicated")
        if conts:
            return self.fail("Inp", p, "continuations may only be received in calls")
        if a.kind is NameKind.CONT:
            if len(s) != 2 or s[0].name.id != a.id or s[0].tag is not Tag.I or s[1].tag is not Tag.O:
                return self.fail("Inp-answer", p, f"stack must be {a.id}^i, p^o")
            if s[1].name.id == a.id:
                return self.fail("Inp-answer", p, "the answer and its waiter must differ")
            return self.check(p.body, (s[1],))
        if len(s) != 1 or s[0].tag is not Tag.O:
            return self.fail("Inp-plain", p, "stack must be a single p^o")
        return self.check(p.body, s)

    def _par(self, p: Par, parts: list[Process], s: Stack) -> bool:
        if len(parts) == 1:
            return self.check(parts[0], s)
        head, rest = parts[0], parts[1:]
        head_names = {n.id for n in head.fn}
        rest_names = {n.id for q in rest for n in q.fn}
        choices: list[tuple[bool, ...]] = []
        for e in s:
            options = tuple(side for side, names in ((True, head_names), (False, rest_names)) if e.name.id in names)
            if not options:
                return self.fail("Par", p, f"{e.name.id} is free in no component")
            choices.append(options)
        for assignment in itertools.product(*choices):
            left = tuple(e for e, side in zip(s, assignment) if side)
            right = tuple(e for e, side in zip(s, assignment) if not side)
            if not (stack_wellformed(left) and stack_wellformed(right)):
                continue
            if self.check(head, left) and self.check(par(*rest), right):
                return True
        return self.fail("Par", p, "no split of the stack types both sides")

    def _res(self, p: Res, s: Stack) -> bool:
        b, body = p.binder, p.body
        if b.id in stack_names(s):
            avoid = stack_names(s) | {n.id for n in all_names(p)}
            fresh = fresh_name(b.kind, avoid, b.sort, tag="c")
            b, body = fresh, rename(body, {b: fresh})
        if b.kind is not NameKind.CONT:
            return self.check(body, s)
        if self.check(body, s):
            return True
        for k in range(len(s) + 1):
            if k and s[k - 1].tag is not Tag.I:
                continue
            candidate = s[:k] + (StackEntry(b, Tag.O), StackEntry(b, Tag.I)) + s[k:]
            if stack_wellformed(candidate) and self.check(body, candidate):
                return True
        return self.fail("Res", p, f"no position on the stack fits {b.id}")


def _same(s: Stack, expected: tuple[tuple[Name, Tag], ...]) -> bool:
    return len(s) == len(expected) and all(
        e.name.id == n.id and e.tag is t for e, (n, t) in zip(s, expected)
    )


@dataclass(frozen=True)
class WbResult:
    ok: bool
    failure: TypingFailure | None = None

    def __bool__(self) -> bool:
        return self.ok


_TYPED: dict[tuple[str, tuple], bool] = {}
_TYPED_LOCK = threading.Lock()
_TYPED_LIMIT = 200_000


def typecheck_wb(p: Process, stack: Stack) -> WbResult:
    """Decide ``stack |- p``; the failure names the first rule that could not apply."""
    if not stack_wellformed(stack):
        return WbResult(False, TypingFailure(rule="Stack", subterm=p.key, reason="ill-formed stack"))
    checker = _Checker()
    if checker.check(p, stack):
        return WbResult(True)
    return WbResult(False, checker.failure)


def is_typed(p: Process, stack: Stack) -> bool:
    key = (p.key, tuple((e.name.id, e.tag) for e in stack))
    with _TYPED_LOCK:
        cached = _TYPED.get(key)
    if cached is None:
        cached = typecheck_wb(p, stack).ok
        with _TYPED_LOCK:
            if len(_TYPED) > _TYPED_LIMIT:
                _TYPED.clear()
            _TYPED[key] = cached
    return cached


def enumerate_stacks(p: Process, limit: int = 5) -> list[Stack]:
    """Every stack under which ``p`` is typable."""
    conts = sorted({n for n in p.fn if n.kind is NameKind.CONT}, key=lambda n: n.id)
    if len(conts) > limit:
        raise ValueError(f"too many free continuation names to enumerate ({len(conts)})")
    found: list[Stack] = []
    units_per_name = [
        ((StackEntry(c, Tag.O),), (StackEntry(c, Tag.I),), (StackEntry(c, Tag.O), StackEntry(c, Tag.I)))
        for c in conts
    ]
    for units in itertools.product(*units_per_name):
        for order in itertools.permutations(units):
            stack = tuple(e for unit in order for e in unit)
            if stack_wellformed(stack) and stack not in found and is_typed(p, stack):
                found.append(stack)
    return found


# ── Discreet processes ────────────────────────────────────────────────────────


def is_discreet(p: Process) -> bool:
    """Every continuation passed in a call is freshly restricted."""

    def go(q: Process, private: frozenset[str]) -> bool:
        if isinstance(q, Output):
            if q.subject.kind is NameKind.OUT:
                return all(c.id in private for c in _conts(q.objects))
            return not _conts(q.objects)
        if isinstance(q, Input):
            return go(q.body, private - {b.id for b in q.binders})
        if isinstance(q, Res):
            inner = private | {q.binder.id} if q.binder.kind is NameKind.CONT else private - {q.binder.id}
            return go(q.body, inner)
        if isinstance(q, Par):
            return all(go(r, private) for r in q.parts)
        if isinstance(q, Sum):
            return all(go(r, private) for r in q.branches)
        if isinstance(q, (Tau, Match)):
            return go(q.body, private)
        return True

    return go(p, frozenset())


def is_discreet_transition(t: Transition, stack: Stack) -> bool:
    action = t.action
    conts = _conts(action.objects)
    if action.is_output:
        return all(c in action.extruded for c in conts)
    if action.is_input:
        held = stack_names(stack) | {n.id for n in t.source.fn}
        return all(c.id not in held for c in conts)
    return True


def make_discreet(p: Process) -> Process:
    """Replace every call passing a non-private continuation ``p`` by a private forwarder to ``p``."""
    avoid = {n.id for n in all_names(p)}

    def forwarder(out: Output) -> Process:
        cont = out.objects[-1]
        q = fresh_name(NameKind.CONT, avoid, cont.sort, tag="c")
        avoid.add(q.id)
        ys: list[Name] = []
        for kind in continuation_signature(cont):
            y = fresh_name(kind, avoid, tag="c")
            avoid.add(y.id)
            ys.append(y)
        relay = Input(q, tuple(ys), Output(cont, tuple(ys)))
        return Res(q, par(Output(out.subject, out.objects[:-1] + (q,)), relay))

    def go(q: Process, private: frozenset[str]) -> Process:
        if isinstance(q, Output):
            conts = _conts(q.objects)
            if q.subject.kind is NameKind.OUT and conts and conts[-1].id not in private:
                return forwarder(q)
            return q
        if isinstance(q, Input):
            return type(q)(q.subject, q.binders, go(q.body, private - {b.id for b in q.binders}))
        if isinstance(q, Res):
            inner = private | {q.binder.id} if q.binder.kind is NameKind.CONT else private
            return Res(q.binder, go(q.body, inner))
        if isinstance(q, Par):
            return Par(tuple(go(r, private) for r in q.parts))
        if isinstance(q, Sum):
            return Sum(tuple(go(r, private) for r in q.branches))
        if isinstance(q, Tau):
            return Tau(go(q.body, private))
        if isinstance(q, Match):
            return Match(q.left, q.right, go(q.body, private))
        return q

    return go(p, frozenset())


def continuation_signature(cont: Name, procs: tuple[Process, ...] = ()) -> tuple[NameKind, ...]:
    """Kinds answered on ``cont``: its sort, else the first answer found in ``procs``."""
    if cont.sort is not None:
        return cont.sort
    for proc in procs:
        for node in walk(proc):
            if isinstance(node, Output) and node.subject.id == cont.id:
                return tuple(o.kind for o in node.objects)
            if isinstance(node, Input) and node.subject.id == cont.id:
                return tuple(b.kind for b in node.binders)
    return ()


# ── Typed transitions ─────────────────────────────────────────────────────────


@dataclass(frozen=True)
class WbConfig:
    stack: Stack
    proc: Process


def wb_allowed(config: WbConfig, t: Transition) -> Allowed:
    """Whether ``t`` is observable from ``config`` under the well-bracketed discipline."""
    s, action = config.stack, t.action
    if not is_typed(config.proc, s):
        return refused("configuration is not typed")
    seq = type_allowed(SeqConfig(erase(s), config.proc), action)
    if not seq:
        return seq
    if action.is_tau:
        return ALLOWED
    held = stack_names(s)
    for c in {n.id for n in action.names() if n.kind is NameKind.CONT} & held:
        if s[0].name.id != c:
            return refused(f"continuation {c} is not on top of the stack")
        if action.subject.id == c:
            wanted = Tag.I if action.is_input else Tag.O
            if s[0].tag is not wanted:
                return refused(f"{action.key} does not match the capability {s[0]}")
            if c in stack_names(s[1:]):
                return refused(f"{c} is still pending below the top of the stack")
    if not is_discreet_transition(t, s):
        return refused(f"{action.key} passes a continuation that is not private")
    return ALLOWED


def evolve_stack(config: WbConfig, t: Transition) -> WbConfig:
    s, action = config.stack, t.action
    if action.is_tau:
        if len(s) >= 2 and s[0].name.id == s[1].name.id and s[0].tag is Tag.O and s[1].tag is Tag.I:
            if s[0].name.id not in {n.id for n in t.target.fn}:
                return WbConfig(s[2:], t.target)
        return WbConfig(s, t.target)
    subject = action.subject
    conts = _conts(action.objects)
    if action.is_output:
        if subject.kind is NameKind.CONT:
            return WbConfig(s[1:], t.target)
        if subject.kind is NameKind.OUT and conts:
            sent = conts[-1]
            if sent in action.extruded:
                return WbConfig((StackEntry(sent, Tag.I),) + s, t.target)
            return WbConfig(tuple(e for e in s if not (e.name.id == sent.id and e.tag is Tag.O)), t.target)
        return WbConfig(s, t.target)
    if subject.kind is NameKind.CONT:
        return WbConfig(s[1:], t.target)
    if subject.kind is NameKind.OUT and conts:
        return WbConfig((StackEntry(conts[-1], Tag.O),) + s, t.target)
    return WbConfig(s, t.target)


# ── Forwarder contexts ────────────────────────────────────────────────────────


def build_forwarder_context(
    stack: Stack,
    fresh_x: list[Name],
    fresh_q: Name,
) -> tuple[StaticContext, Stack]:
    """Context turning a process typed by ``stack`` into one typed by ``xi, q^o``.

    The stack must decompose as ``xi, p1^o, q1^i, ..., pn^o`` with ``xi``
    empty or a single ``i`` entry; each ``pi`` is forwarded as a call on
    ``fresh_x[i]`` whose continuation is ``q_i`` (``fresh_q`` for the last).
    """
    if not stack:
        return StaticContext(), ()
    xi: Stack = ()
    rest = stack
    if stack[0].tag is Tag.I:
        xi, rest = stack[:1], stack[1:]
    if not rest or len(rest) % 2 == 0:
        raise DecompositionError("stack does not end with an output capability")
    for i, e in enumerate(rest):
        if e.tag is not (Tag.O if i % 2 == 0 else Tag.I):
            raise DecompositionError("stack tags do not alternate")
    ps = [e.name for e in rest[0::2]]
    qs = [e.name for e in rest[1::2]] + [fresh_q]
    if len(fresh_x) < len(ps):
        raise DecompositionError(f"need {len(ps)} fresh call names, got {len(fresh_x)}")
    avoid = {e.name.id for e in stack} | {x.id for x in fresh_x} | {fresh_q.id}
    frames: list[Process] = []
    for p, q, x in zip(ps, qs, fresh_x):
        ys: list[Name] = []
        for kind in continuation_signature(p):
            y = fresh_name(kind, avoid, tag="c")
            avoid.add(y.id)
            ys.append(y)
        call = Name(x.id, NameKind.OUT, tuple(y.kind for y in ys) + (NameKind.CONT,))
        frames.append(Input(p, tuple(ys), Output(call, tuple(ys) + (q,))))
    ctx = StaticContext(tuple(ps) + tuple(qs[:-1]), par(*frames))
    return ctx, xi + (StackEntry(fresh_q, Tag.O),)


__all__ = [
    "DecompositionError",
    "Stack",
    "StackEntry",
    "Tag",
    "WbConfig",
    "WbResult",
    "build_forwarder_context",
    "continuation_signature",
    "enumerate_stacks",
    "erase",
    "evolve_stack",
    "interleave",
    "is_clean",
    "is_discreet",
    "is_discreet_transition",
    "is_typed",
    "make_discreet",
    "stack_wellformed",
    "typecheck_wb",
    "wb_allowed",
]
