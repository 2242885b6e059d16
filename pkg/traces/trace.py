"""
Trace values and their text dump.

A dump has one step per line: ``action TAB stack-before TAB stack-after``.
Stacks use the ``p^o, q^i`` notation and ``empty`` for the empty stack.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from calculus.lts import TAU, Action
from calculus.parser import SourceUnit, UndeclaredName, parse_stack, render_stack
from calculus.syntax import Name, NameKind, Plus, literal
from discipline.brackets import Stack, WbConfig

_RESERVED_KINDS = {"x": NameKind.OUT, "u": NameKind.IN, "p": NameKind.CONT, "l": NameKind.REF, "n": NameKind.VAL}
_RESERVED = re.compile(r"^_([xupln])[fct]?\d+$")
_ACTION = re.compile(
    r"^(?:new (?P<ext>[^.]+)\. )?(?P<subject>[^<(\s]+)(?:<(?P<out>[^>]*)>|\((?P<inp>[^)]*)\))$"
)


class StepKind(str, Enum):
    QUESTION = "question"
    ANSWER = "answer"
    INTERNAL = "internal"


@dataclass(frozen=True)
class TraceStep:
    action: Action
    before: Stack
    after: Stack


@dataclass(frozen=True)
class Trace:
    steps: tuple[TraceStep, ...] = ()
    root: WbConfig | None = None

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def actions(self) -> tuple[Action, ...]:
        return tuple(s.action for s in self.steps)

    @property
    def key(self) -> tuple:
        return tuple((s.action.key, _ids(s.before), _ids(s.after)) for s in self.steps)

    def extend(self, step: TraceStep) -> Trace:
        return Trace(self.steps + (step,), self.root)


def _ids(stack: Stack) -> tuple[tuple[str, str], ...]:
    return tuple((e.name.id, e.tag.value) for e in stack)


def same_stack(a: Stack, b: Stack) -> bool:
    return _ids(a) == _ids(b)


def dump_trace(trace: Trace) -> str:
    lines = [f"{s.action.key}\t{render_stack(s.before)}\t{render_stack(s.after)}" for s in trace.steps]
    return "\n".join(lines) + ("\n" if lines else "")


def _resolve(ident: str, unit: SourceUnit | None) -> Name:
    if ident.isdigit():
        return literal(int(ident))
    m = _RESERVED.match(ident)
    if m:
        return Name(ident, _RESERVED_KINDS[m.group(1)])
    if unit is not None and ident in unit.declarations:
        return Name(ident, unit.declarations[ident], unit.sorts.get(ident))
    raise UndeclaredName(ident)


def _obj(text: str, unit: SourceUnit | None):
    if "+" in text:
        left, right = text.split("+", 1)
        modulus = len(unit.domain) if unit is not None and unit.domain else 3
        return Plus(_resolve(left, unit), _resolve(right, unit), modulus)
    return _resolve(text, unit)


def _split(text: str | None) -> list[str]:
    return [s.strip() for s in (text or "").split(",") if s.strip()]


def parse_action(text: str, unit: SourceUnit | None = None) -> Action:
    text = text.strip()
    if text == "tau":
        return TAU
    m = _ACTION.match(text)
    if m is None:
        raise ValueError(f"not an action: {text!r}")
    subject = _resolve(m.group("subject"), unit)
    if m.group("inp") is not None:
        return Action("in", subject, tuple(_obj(o, unit) for o in _split(m.group("inp"))))
    objects = tuple(_obj(o, unit) for o in _split(m.group("out")))
    extruded_ids = set(_split(m.group("ext")))
    extruded = tuple(o for o in objects if isinstance(o, Name) and o.id in extruded_ids)
    return Action("out", subject, objects, extruded)


def _stack(text: str, unit: SourceUnit | None) -> Stack:
    text = text.strip()
    return () if text in ("", "empty") else parse_stack(text, unit)


def load_trace(text: str, unit: SourceUnit | None = None) -> Trace:
    """Read a dump back; names outside ``unit`` must use the reserved fresh shapes."""
    steps: list[TraceStep] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise ValueError(f"line {lineno}: expected 3 tab-separated fields, got {len(fields)}")
        action, before, after = fields
        steps.append(TraceStep(parse_action(action, unit), _stack(before, unit), _stack(after, unit)))
    return Trace(tuple(steps))
