"""
Abstract syntax of the asynchronous pi-calculus.

Names carry a kind (output-controlled, input-controlled, continuation,
reference, data value) and an optional one-level sort: the tuple of kinds
their prefixes transmit. Processes are immutable trees; every node exposes a
``key`` string used for ordering and hashing states, and ``fn`` for its free
names.

``canonical_form`` decides structural congruence by normalisation: parallel
regions are flattened, unused restrictions are collected, restricted names
are ordered by how they are used (symmetric names are singled out in turn,
keeping the least rendering), and every binder is renamed after its
depth (``_x0``, ``_u3``...). User identifiers never start with ``_``, so the
reserved shapes below cannot clash with source names:

  _{letter}{level}     bound names in canonical form
  _{letter}f{n}        fresh free names (extrusion, instantiation)
  _{letter}t{n}        temporaries used while canonicalising
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

# ── Errors ────────────────────────────────────────────────────────────────────


class CalculusError(Exception):
    """Root of every error raised by the workbench."""


class KindMismatch(CalculusError):
    def __init__(self, expected: Name, got: Name):
        self.expected = expected
        self.got = got
        super().__init__(
            f"cannot substitute {got.id} ({got.kind.value}) for {expected.id} ({expected.kind.value})"
        )


class BudgetExceeded(CalculusError):
    """Raised when a strict computation needs more replication unfoldings than allowed."""


# ── Names ─────────────────────────────────────────────────────────────────────


class NameKind(str, Enum):
    OUT = "out"
    IN = "in"
    CONT = "cont"
    REF = "ref"
    VAL = "val"

    @property
    def output_controlled(self) -> bool:
        return self in (NameKind.OUT, NameKind.CONT)

    @property
    def input_controlled(self) -> bool:
        # references behave as input-controlled names for sequentiality
        return self in (NameKind.IN, NameKind.REF)

    @property
    def letter(self) -> str:
        return _KIND_LETTERS[self]


_KIND_LETTERS = {
    NameKind.OUT: "x",
    NameKind.IN: "u",
    NameKind.CONT: "p",
    NameKind.REF: "l",
    NameKind.VAL: "n",
}

Sort = tuple[NameKind, ...]


@dataclass(frozen=True, order=True)
class Name:
    id: str
    kind: NameKind
    sort: Sort | None = None

    def __str__(self) -> str:
        return self.id

    @property
    def is_literal(self) -> bool:
        return self.kind is NameKind.VAL and self.id.isdigit()

    def renamed(self, new_id: str) -> Name:
        return Name(new_id, self.kind, self.sort)


def literal(value: int) -> Name:
    return Name(str(value), NameKind.VAL)


@dataclass(frozen=True)
class Plus:
    """Modular addition of two data values, folded as soon as both sides are literals."""

    left: Name
    right: Name
    modulus: int

    kind = NameKind.VAL

    @property
    def id(self) -> str:
        return f"{self.left.id}+{self.right.id}"

    def names(self) -> tuple[Name, ...]:
        return (self.left, self.right)


Obj = Name | Plus


def fold(obj: Obj) -> Obj:
    if isinstance(obj, Plus) and obj.left.is_literal and obj.right.is_literal:
        return literal((int(obj.left.id) + int(obj.right.id)) % obj.modulus)
    return obj


def _obj_names(obj: Obj) -> tuple[Name, ...]:
    names = obj.names() if isinstance(obj, Plus) else (obj,)
    return tuple(n for n in names if not n.is_literal)


def fresh_name(
    kind: NameKind,
    avoid: set[str] | frozenset[str],
    sort: Sort | None = None,
    tag: str = "f",
) -> Name:
    """Smallest ``_{letter}{tag}{n}`` whose id is not in ``avoid``."""
    for n in itertools.count():
        candidate = f"_{kind.letter}{tag}{n}"
        if candidate not in avoid:
            return Name(candidate, kind, sort)
    raise AssertionError("unreachable")


def level_name(binder: Name, level: int) -> Name:
    return Name(f"_{binder.kind.letter}{level}", binder.kind, binder.sort)


# ── Processes ─────────────────────────────────────────────────────────────────


class Process:
    """Base class of the process syntax tree."""

    @cached_property
    def key(self) -> str:
        return self._key()

    @cached_property
    def fn(self) -> frozenset[Name]:
        return self._fn()

    def _key(self) -> str:  # pragma: no cover - abstract
        raise NotImplementedError

    def _fn(self) -> frozenset[Name]:  # pragma: no cover - abstract
        raise NotImplementedError

    def __lt__(self, other: Process) -> bool:
        return self.key < other.key


@dataclass(frozen=True, eq=True)
class Nil(Process):
    def _key(self) -> str:
        return "0"

    def _fn(self) -> frozenset[Name]:
        return frozenset()


@dataclass(frozen=True, eq=True)
class Output(Process):
    subject: Name
    objects: tuple[Obj, ...] = ()

    def _key(self) -> str:
        return f"{self.subject.id}<{','.join(o.id for o in self.objects)}>"

    def _fn(self) -> frozenset[Name]:
        names = {self.subject}
        for obj in self.objects:
            names.update(_obj_names(obj))
        return frozenset(names)


@dataclass(frozen=True, eq=True)
class Input(Process):
    subject: Name
    binders: tuple[Name, ...]
    body: Process

    replicated = False

    def _key(self) -> str:
        bang = "!" if self.replicated else ""
        return f"{bang}{self.subject.id}({','.join(b.id for b in self.binders)}).{self.body.key}"

    def _fn(self) -> frozenset[Name]:
        return frozenset({self.subject} | (self.body.fn - set(self.binders)))


@dataclass(frozen=True, eq=True)
class ReplInput(Input):
    replicated = True


@dataclass(frozen=True, eq=True)
class Par(Process):
    parts: tuple[Process, ...]

    def _key(self) -> str:
        return "(" + "|".join(p.key for p in self.parts) + ")"

    def _fn(self) -> frozenset[Name]:
        return frozenset().union(*(p.fn for p in self.parts))


@dataclass(frozen=True, eq=True)
class Res(Process):
    binder: Name
    body: Process

    def _key(self) -> str:
        return f"(new {self.binder.id}){self.body.key}"

    def _fn(self) -> frozenset[Name]:
        return self.body.fn - {self.binder}


@dataclass(frozen=True, eq=True)
class Tau(Process):
    body: Process

    def _key(self) -> str:
        return f"tau.{self.body.key}"

    def _fn(self) -> frozenset[Name]:
        return self.body.fn


@dataclass(frozen=True, eq=True)
class Match(Process):
    left: Name
    right: Name
    body: Process

    def _key(self) -> str:
        return f"[{self.left.id}={self.right.id}]{self.body.key}"

    def _fn(self) -> frozenset[Name]:
        extra = {n for n in (self.left, self.right) if not n.is_literal}
        return self.body.fn | extra


@dataclass(frozen=True, eq=True)
class Sum(Process):
    branches: tuple[Process, ...]

    def _key(self) -> str:
        return "(" + "+".join(b.key for b in self.branches) + ")"

    def _fn(self) -> frozenset[Name]:
        return frozenset().union(*(b.fn for b in self.branches))


NIL = Nil()

GUARDS = (Nil, Input, Tau, Match, Sum)


def is_guard(p: Process) -> bool:
    """Whether ``p`` belongs to the guarded grammar allowed under sums and matches."""
    return isinstance(p, GUARDS) and not isinstance(p, ReplInput)


def par(*procs: Process) -> Process:
    parts: list[Process] = []
    for p in procs:
        if isinstance(p, Par):
            parts.extend(q for q in p.parts if not isinstance(q, Nil))
        elif not isinstance(p, Nil):
            parts.append(p)
    if not parts:
        return NIL
    if len(parts) == 1:
        return parts[0]
    return Par(tuple(parts))


def restrict(binders: tuple[Name, ...] | list[Name], body: Process) -> Process:
    for b in reversed(list(binders)):
        body = Res(b, body)
    return body


def free_names(p: Process) -> frozenset[Name]:
    return p.fn


def free_names_of_kind(p: Process, kind: NameKind) -> frozenset[Name]:
    return frozenset(n for n in p.fn if n.kind is kind)


def bound_names(p: Process) -> frozenset[Name]:
    out: set[Name] = set()
    for node in walk(p):
        if isinstance(node, Input):
            out.update(node.binders)
        elif isinstance(node, Res):
            out.add(node.binder)
    return frozenset(out)


def all_names(p: Process) -> frozenset[Name]:
    names: set[Name] = set()
    for node in walk(p):
        if isinstance(node, Output):
            names.add(node.subject)
            for obj in node.objects:
                names.update(_obj_names(obj))
        elif isinstance(node, Input):
            names.add(node.subject)
            names.update(node.binders)
        elif isinstance(node, Res):
            names.add(node.binder)
        elif isinstance(node, Match):
            names.update(n for n in (node.left, node.right) if not n.is_literal)
    return frozenset(names)


def walk(p: Process):
    """Pre-order traversal of every subterm."""
    stack = [p]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, (Input, Res, Tau, Match)):
            stack.append(node.body)
        elif isinstance(node, Par):
            stack.extend(reversed(node.parts))
        elif isinstance(node, Sum):
            stack.extend(reversed(node.branches))


def size(p: Process) -> int:
    return sum(1 for _ in walk(p))


# ── Substitution ──────────────────────────────────────────────────────────────


def substitute(p: Process, to: list[Name] | tuple[Name, ...], frm: list[Name] | tuple[Name, ...]) -> Process:
    """Simultaneous capture-avoiding substitution of ``to`` for ``frm``."""
    if len(to) != len(frm):
        raise ValueError(f"substitution arity mismatch: {len(to)} names for {len(frm)}")
    mapping: dict[Name, Name] = {}
    for new, old in zip(to, frm):
        if new.kind is not old.kind:
            raise KindMismatch(old, new)
        if new != old:
            mapping[old] = new
    return _subst(p, mapping)


def rename(p: Process, mapping: dict[Name, Name]) -> Process:
    """Like ``substitute`` with a mapping; kinds are assumed to agree."""
    return _subst(p, {k: v for k, v in mapping.items() if k != v})


def _map_obj(obj: Obj, m: dict[Name, Name]) -> Obj:
    if isinstance(obj, Plus):
        return fold(Plus(m.get(obj.left, obj.left), m.get(obj.right, obj.right), obj.modulus))
    return m.get(obj, obj)


def _subst(p: Process, mapping: dict[Name, Name]) -> Process:
    if not mapping:
        return p
    m = {k: v for k, v in mapping.items() if k in p.fn}
    if not m:
        return p
    if isinstance(p, Output):
        return Output(m.get(p.subject, p.subject), tuple(_map_obj(o, m) for o in p.objects))
    if isinstance(p, Input):
        binders, body = _avoid_capture(p.binders, p.body, m)
        return type(p)(m.get(p.subject, p.subject), binders, body)
    if isinstance(p, Res):
        (binder,), body = _avoid_capture((p.binder,), p.body, m)
        return Res(binder, body)
    if isinstance(p, Par):
        return Par(tuple(_subst(q, m) for q in p.parts))
    if isinstance(p, Sum):
        return Sum(tuple(_subst(q, m) for q in p.branches))
    if isinstance(p, Tau):
        return Tau(_subst(p.body, m))
    if isinstance(p, Match):
        return Match(m.get(p.left, p.left), m.get(p.right, p.right), _subst(p.body, m))
    return p


def _avoid_capture(
    binders: tuple[Name, ...], body: Process, m: dict[Name, Name]
) -> tuple[tuple[Name, ...], Process]:
    inner = {k: v for k, v in m.items() if k not in binders}
    if not inner:
        return binders, body
    targets = {v.id for v in inner.values()}
    renaming: dict[Name, Name] = {}
    new_binders: list[Name] = []
    avoid = {n.id for n in body.fn} | targets | {b.id for b in binders}
    for b in binders:
        if b.id in targets:
            fresh = fresh_name(b.kind, avoid, b.sort, tag="c")
            avoid.add(fresh.id)
            renaming[b] = fresh
            new_binders.append(fresh)
        else:
            new_binders.append(b)
    if renaming:
        body = _subst(body, renaming)
    return tuple(new_binders), _subst(body, inner)


# ── Structural congruence ─────────────────────────────────────────────────────

_MARK = "_@"
_OTHER = "_*"


def canonical_form(p: Process) -> Process:
    """Normal form of ``p`` modulo structural congruence and alpha-conversion."""
    return _canon(p, 0, _Temps())


class _Temps:
    def __init__(self) -> None:
        self.counter = itertools.count()

    def next(self, binder: Name) -> Name:
        return Name(f"_{binder.kind.letter}t{next(self.counter)}", binder.kind, binder.sort)


def _canon(p: Process, depth: int, temps: _Temps) -> Process:
    if isinstance(p, Nil):
        return p
    if isinstance(p, Output):
        return Output(p.subject, tuple(fold(o) for o in p.objects))
    if isinstance(p, Input):
        levels = tuple(level_name(b, depth + i) for i, b in enumerate(p.binders))
        body = _subst(p.body, dict(zip(p.binders, levels)))
        return type(p)(p.subject, levels, _canon(body, depth + len(levels), temps))
    if isinstance(p, Tau):
        return Tau(_canon(p.body, depth, temps))
    if isinstance(p, Match):
        left, right = sorted((p.left, p.right), key=lambda n: n.id)
        return Match(left, right, _canon(p.body, depth, temps))
    if isinstance(p, Sum):
        branches: list[Process] = []
        for b in p.branches:
            c = _canon(b, depth, temps)
            if isinstance(c, Sum):
                branches.extend(c.branches)
            elif not isinstance(c, Nil):
                branches.append(c)
        branches.sort(key=lambda q: q.key)
        if not branches:
            return NIL
        if len(branches) == 1:
            return branches[0]
        return Sum(tuple(branches))
    return _canon_region(p, depth, temps)


def _flatten(p: Process, temps: _Temps, binders: list[Name], comps: list[Process]) -> None:
    if isinstance(p, Par):
        for q in p.parts:
            _flatten(q, temps, binders, comps)
    elif isinstance(p, Res):
        tmp = temps.next(p.binder)
        binders.append(tmp)
        _flatten(_subst(p.body, {p.binder: tmp}), temps, binders, comps)
    elif not isinstance(p, Nil):
        comps.append(p)


def _canon_region(p: Process, depth: int, temps: _Temps) -> Process:
    binders: list[Name] = []
    raw: list[Process] = []
    _flatten(p, temps, binders, raw)
    used = frozenset().union(*(c.fn for c in raw)) if raw else frozenset()
    binders = [b for b in binders if b in used]
    k = len(binders)
    comps = [_canon(c, depth + k, temps) for c in raw]
    comps = [c for c in comps if not isinstance(c, Nil)]
    if not binders:
        return _rebuild((), comps)

    colors = _refine({b: 0 for b in binders}, comps)
    return _individualize(colors, comps, depth)


def _signature(b: Name, colors: dict[Name, int], comps: list[Process]) -> tuple:
    """How ``b`` is used, with every other binder replaced by its current class."""
    marks = {o: Name(f"{_OTHER}{c}", o.kind, o.sort) for o, c in colors.items() if o != b}
    marks[b] = Name(_MARK, b.kind, b.sort)
    keys = sorted(_subst(c, marks).key for c in comps if b in c.fn)
    return (colors[b], b.kind.value, len(keys), tuple(keys))


def _refine(colors: dict[Name, int], comps: list[Process]) -> dict[Name, int]:
    """Split binder classes by usage until the partition is stable."""
    while True:
        sigs = {b: _signature(b, colors, comps) for b in colors}
        rank = {s: i for i, s in enumerate(sorted(set(sigs.values())))}
        refined = {b: rank[s] for b, s in sigs.items()}
        if len(rank) == len(set(colors.values())):
            return refined
        colors = refined


def _swappable(a: Name, b: Name, comps: list[Process]) -> bool:
    swapped = sorted(_subst(c, {a: b, b: a}).key for c in comps)
    return swapped == sorted(c.key for c in comps)


def _individualize(colors: dict[Name, int], comps: list[Process], depth: int) -> Process:
    """Least rendering over every way of singling out the members of the first tied class."""
    sizes: dict[int, int] = {}
    for c in colors.values():
        sizes[c] = sizes.get(c, 0) + 1
    tied = min((c for c, n in sizes.items() if n > 1), default=None)
    if tied is None:
        return _assign_levels(sorted(colors, key=colors.__getitem__), comps, depth)

    best: Process | None = None
    tried: list[Name] = []
    for m in (b for b in colors if colors[b] == tied):
        # a transposition that fixes the region leads to the same rendering
        if any(_swappable(m, t, comps) for t in tried):
            continue
        tried.append(m)
        forced = {b: 2 * c + (1 if c == tied and b != m else 0) for b, c in colors.items()}
        candidate = _individualize(_refine(forced, comps), comps, depth)
        if best is None or candidate.key < best.key:
            best = candidate
    assert best is not None
    return best


def _assign_levels(order: list[Name], comps: list[Process], depth: int) -> Process:
    mapping = {b: level_name(b, depth + i) for i, b in enumerate(order)}
    renamed = [_subst(c, mapping) for c in comps]
    return _rebuild(tuple(mapping[b] for b in order), renamed)


def _rebuild(binders: tuple[Name, ...], comps: list[Process]) -> Process:
    comps = sorted(comps, key=lambda c: c.key)
    if not comps:
        body: Process = NIL
    elif len(comps) == 1:
        body = comps[0]
    else:
        body = Par(tuple(comps))
    return restrict(binders, body)


def open_top(p: Process) -> tuple[tuple[Name, ...], tuple[Process, ...]]:
    """Split a canonical process into its top restrictions and parallel components."""
    binders: list[Name] = []
    while isinstance(p, Res):
        binders.append(p.binder)
        p = p.body
    if isinstance(p, Nil):
        return tuple(binders), ()
    if isinstance(p, Par):
        return tuple(binders), p.parts
    return tuple(binders), (p,)


def congruent(p: Process, q: Process) -> bool:
    return canonical_form(p).key == canonical_form(q).key


# ── Static contexts ───────────────────────────────────────────────────────────


@dataclass(frozen=True)
class StaticContext:
    """``new restrictions.(frame | [.])``."""

    restrictions: tuple[Name, ...] = ()
    frame: Process = NIL


def plug(ctx: StaticContext, p: Process) -> Process:
    return restrict(ctx.restrictions, par(ctx.frame, p))
