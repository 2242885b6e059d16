"""
Reference names: accessible sets, the input constraint on accessible
references, and the read/write/swap/fetch-and-add encodings.

A reference ``l`` holding ``n`` is the unguarded output ``l<n>``; reading
consumes it and re-emits it.
"""

from __future__ import annotations

from dataclasses import dataclass

from calculus.syntax import (
    CalculusError,
    Input,
    Name,
    NameKind,
    Obj,
    Output,
    Plus,
    Process,
    canonical_form,
    fold,
    fresh_name,
    open_top,
    par,
)
from discipline.common import ALLOWED, Allowed, refused

MACROS = ("read", "write", "swap", "faa", "swapD", "faaD")


class MultipleOutputs(CalculusError):
    def __init__(self, ref: Name):
        self.ref = ref
        super().__init__(f"reference {ref.id} has more than one unguarded output")


class FreshnessViolation(CalculusError):
    pass


@dataclass(frozen=True)
class RefEnv:
    accessible: frozenset[Name] = frozenset()


def accessible_refs(p: Process, open_restrictions: bool = False) -> frozenset[Name]:
    """References with an unguarded top-level output in ``p``."""
    restricted, comps = open_top(canonical_form(p))
    hidden = set() if open_restrictions else {b.id for b in restricted}
    seen: dict[str, Name] = {}
    for c in comps:
        if isinstance(c, Output) and c.subject.kind is NameKind.REF and c.subject.id not in hidden:
            if c.subject.id in seen:
                raise MultipleOutputs(c.subject)
            seen[c.subject.id] = c.subject
    return frozenset(seen.values())


def refs_constraint(env: RefEnv, action) -> Allowed:
    """Refuse inputs at references the process already holds."""
    if action.is_input and action.subject.kind is NameKind.REF:
        if any(r.id == action.subject.id for r in env.accessible):
            return refused(f"input at accessible reference {action.subject.id}")
    return ALLOWED


def _obj_ids(obj: Obj | None) -> set[str]:
    if obj is None:
        return set()
    if isinstance(obj, Plus):
        return {obj.left.id, obj.right.id}
    return {obj.id}


def _write(ref: Name, value: Obj, body: Process, avoid: set[str], fresh: Name | None = None) -> Process:
    if fresh is None:
        fresh = fresh_name(NameKind.VAL, avoid | {n.id for n in body.fn} | _obj_ids(value))
    elif fresh in body.fn or fresh.id in _obj_ids(value):
        raise FreshnessViolation(f"{fresh.id} must not occur in the continuation of write {ref.id}")
    return Input(ref, (fresh,), par(Output(ref, (value,)), body))


def expand_macro(
    macro: str,
    ref: Name,
    body: Process,
    value: Obj | None = None,
    binder: Name | None = None,
    modulus: int = 3,
    fresh: Name | None = None,
) -> Process:
    """Literal expansion of a reference macro into plain inputs and outputs."""
    if macro not in MACROS:
        raise ValueError(f"unknown macro {macro!r}")
    if macro in ("read", "swap", "faa", "swapD", "faaD") and binder is None:
        raise ValueError(f"{macro} needs a binder")
    if macro != "read" and value is None:
        raise ValueError(f"{macro} needs a value")
    if binder is not None and binder.id in _obj_ids(value):
        raise FreshnessViolation(f"{binder.id} would capture the value written to {ref.id}")

    if macro == "read":
        return Input(ref, (binder,), par(Output(ref, (binder,)), body))
    if macro == "write":
        return _write(ref, value, body, {ref.id}, fresh)
    if macro == "swap":
        return Input(ref, (binder,), par(Output(ref, (value,)), body))
    if macro == "faa":
        return Input(ref, (binder,), par(Output(ref, (fold(Plus(binder, value, modulus)),)), body))
    inner_value = value if macro == "swapD" else fold(Plus(binder, value, modulus))
    inner = _write(ref, inner_value, body, {ref.id, binder.id}, fresh)
    return Input(ref, (binder,), par(Output(ref, (binder,)), inner))
