"""
Concrete syntax for processes, declarations, stacks and relation certificates.

    decl out x, y        decl in u        decl cont p, q     decl ref l
    decl val m, n        decl val 0..2    sort x = (val, cont)
    proc P = u().(x<> | y().x<>) | z().y<> | v<>
    stack S = p^o, q^i
    relation R mode="seq" {
        triple eta=1; lhs = P; rhs = Q;
        identity;
    }

Process syntax: output ``a<b,c>``, input ``a(b,c).P``, replication
``!a(b).P``, ``P | Q``, ``new a,b. P`` (scopes to the right), ``G + G``,
``tau.P``, ``[a=b]G``, ``0``, a previously defined process name, and the
reference macros ``read``, ``write``, ``swap``, ``faa``, ``swapD``, ``faaD``.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError

from calculus.syntax import (
    NIL,
    CalculusError,
    Input,
    Match,
    Name,
    NameKind,
    Nil,
    Output,
    Par,
    Plus,
    Process,
    ReplInput,
    Res,
    Sort,
    Sum,
    Tau,
    is_guard,
    literal,
    restrict,
    walk,
)
from discipline.brackets import Stack, StackEntry, Tag
from discipline.references import expand_macro

logger = logging.getLogger(__name__)

DEFAULT_VAL_SIZE = 3

# ── Errors ────────────────────────────────────────────────────────────────────


class PiSyntaxError(CalculusError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        where = f" at line {line}, column {col}" if line is not None else ""
        super().__init__(f"{message}{where}")


class UndeclaredName(PiSyntaxError):
    def __init__(self, name: str, line: int | None = None, col: int | None = None):
        self.name = name
        super().__init__(f"undeclared name '{name}'", line, col)


class GuardGrammarViolation(PiSyntaxError):
    pass


class ContinuationInMatch(PiSyntaxError):
    pass


# ── Grammar ───────────────────────────────────────────────────────────────────

GRAMMAR = r"""
unit: item*

?item: decl | sort_decl | proc_def | stack_def | relation

decl: "decl" kind name_list _term?            -> decl
    | "decl" "val" INT ".." INT _term?        -> decl_domain
kind: "out" -> k_out
    | "in" -> k_in
    | "cont" -> k_cont
    | "ref" -> k_ref
    | "val" -> k_val
sort_decl: "sort" NAME "=" "(" (kind ("," kind)*)? ")" _term?
proc_def: "proc" NAME "=" proc ";"?
stack_def: "stack" NAME "=" stack_lit ";"?
_term: ";" | "."

relation: "relation" NAME rel_opt* "{" rel_entry* "}"
rel_opt: "mode" "=" STRING -> rel_mode
       | "saturate" -> rel_saturate
rel_entry: "triple" field+ -> rel_triple
         | "identity" ";" -> rel_identity
field: "stack" "=" STRING ";" -> f_stack
     | "refs" "=" STRING ";" -> f_refs
     | "eta" "=" INT ";" -> f_eta
     | "lhs" "=" proc ";" -> f_lhs
     | "rhs" "=" proc ";" -> f_rhs

stack_lit: (stack_entry ("," stack_entry)*)?
stack_entry: NAME "^" NAME

?proc: par | restriction
restriction: "new" name_list "." proc
?par: sum ("|" sum)*
?sum: prefix ("+" prefix)*
?prefix: NAME "<" [obj_list] ">"                         -> output
       | NAME "(" [name_list] ")" "." prefix             -> input
       | "!" NAME "(" [name_list] ")" "." prefix         -> repl
       | "tau" "." prefix                                -> tau
       | "[" obj "=" obj "]" prefix                      -> match
       | "read" NAME "(" NAME ")" "." prefix             -> m_read
       | "write" NAME "<" obj ">" "." prefix             -> m_write
       | "swap" NAME "<" obj ">" "(" NAME ")" "." prefix  -> m_swap
       | "faa" NAME "<" obj ">" "(" NAME ")" "." prefix   -> m_faa
       | "swapD" NAME "<" obj ">" "(" NAME ")" "." prefix -> m_swapd
       | "faaD" NAME "<" obj ">" "(" NAME ")" "." prefix  -> m_faad
       | INT                                             -> nil
       | NAME                                            -> ref
       | "(" proc ")"

name_list: NAME ("," NAME)*
obj_list: obj ("," obj)*
?obj: atom_obj
    | atom_obj "+" atom_obj -> plus
?atom_obj: NAME -> obj_name
         | INT -> obj_int

NAME: /[A-Za-z_][A-Za-z0-9_']*/
STRING: /"[^"]*"/
INT: /[0-9]+/
COMMENT: /#[^\n]*/

%import common.WS
%ignore WS
%ignore COMMENT
"""

_PARSER = Lark(
    GRAMMAR,
    start=["unit", "stack_lit", "proc"],
    parser="lalr",
    lexer="contextual",
    propagate_positions=True,
    maybe_placeholders=True,
)

_RESERVED = re.compile(r"^_([xupln])[fct]?\d+$")
_LETTER_KINDS = {"x": NameKind.OUT, "u": NameKind.IN, "p": NameKind.CONT, "l": NameKind.REF, "n": NameKind.VAL}


# ── Source units ──────────────────────────────────────────────────────────────


@dataclass
class RelationTriple:
    lhs: Process
    rhs: Process
    eta: int | None = None
    stack: Stack | None = None
    refs: frozenset[Name] | None = None
    line: int | None = None


@dataclass
class RelationCert:
    name: str
    mode: str = "seq"
    triples: list[RelationTriple] = field(default_factory=list)
    identity: bool = False
    saturate: bool = False


MODES = ("ordinary", "seq", "seq-refs", "wb", "wb-upto")


@dataclass
class SourceUnit:
    declarations: dict[str, NameKind] = field(default_factory=dict)
    sorts: dict[str, Sort] = field(default_factory=dict)
    domain: tuple[Name, ...] = ()
    definitions: dict[str, Process] = field(default_factory=dict)
    stacks: dict[str, Stack] = field(default_factory=dict)
    relations: dict[str, RelationCert] = field(default_factory=dict)

    def process(self, name: str) -> Process:
        try:
            return self.definitions[name]
        except KeyError:
            raise UndeclaredName(f"process {name}") from None


# ── Tree transformer ──────────────────────────────────────────────────────────


def _pos(tok) -> tuple[int | None, int | None]:
    return getattr(tok, "line", None), getattr(tok, "column", None)


class _Builder(Transformer):
    """Builds processes from a parse tree, resolving names against the declarations."""

    def __init__(self, unit: SourceUnit, reserved_ok: bool = False):
        super().__init__()
        self.unit = unit
        self.reserved_ok = reserved_ok
        self.modulus = len(unit.domain) or DEFAULT_VAL_SIZE

    # names

    def _name(self, tok: Token) -> Name:
        ident = str(tok)
        kind = self.unit.declarations.get(ident)
        if kind is None:
            m = _RESERVED.match(ident)
            if ident.startswith("_") and self.reserved_ok and m and m.group(1) in _LETTER_KINDS:
                kind = _LETTER_KINDS[m.group(1)]
            else:
                raise UndeclaredName(ident, *_pos(tok))
        return Name(ident, kind)

    def _int(self, tok: Token) -> Name:
        value = int(tok)
        if self.unit.domain and literal(value) not in self.unit.domain:
            raise PiSyntaxError(f"value {value} outside the declared domain", *_pos(tok))
        if not self.unit.domain and value >= self.modulus:
            raise PiSyntaxError(f"value {value} outside the default domain", *_pos(tok))
        return literal(value)

    def name_list(self, children):
        names = [self._name(t) for t in children]
        if len({n.id for n in names}) != len(names):
            raise PiSyntaxError("binders must be pairwise distinct", *_pos(children[0]))
        return names

    def obj_list(self, children):
        return list(children)

    def obj_name(self, children):
        return self._name(children[0])

    def obj_int(self, children):
        return self._int(children[0])

    def plus(self, children):
        left, right = children
        return Plus(left, right, self.modulus)

    # processes

    def output(self, children):
        subject, objs = children
        return Output(self._name(subject), tuple(objs or ()))

    def input(self, children):
        subject, binders, body = children
        return Input(self._name(subject), tuple(binders or ()), body)

    def repl(self, children):
        subject, binders, body = children
        return ReplInput(self._name(subject), tuple(binders or ()), body)

    def tau(self, children):
        return Tau(children[0])

    @v_args(meta=True)
    def match(self, meta, children):
        left, right, body = children
        if not is_guard(body):
            raise GuardGrammarViolation("match body must be a guard", meta.line, meta.column)
        for n in (left, right):
            if isinstance(n, Plus) or n.kind is NameKind.CONT:
                raise ContinuationInMatch(
                    "matching is only allowed on plain names", meta.line, meta.column
                )
        return Match(left, right, body)

    @v_args(meta=True)
    def sum(self, meta, children):
        for branch in children:
            if not is_guard(branch):
                raise GuardGrammarViolation("summands must be guards", meta.line, meta.column)
        return Sum(tuple(children))

    def par(self, children):
        return Par(tuple(children))

    def restriction(self, children):
        binders, body = children
        return restrict(binders, body)

    def nil(self, children):
        tok = children[0]
        if int(tok) != 0:
            raise PiSyntaxError(f"'{tok}' is not a process", *_pos(tok))
        return NIL

    def ref(self, children):
        tok = children[0]
        try:
            return self.unit.definitions[str(tok)]
        except KeyError:
            raise UndeclaredName(f"process {tok}", *_pos(tok)) from None

    # reference macros

    def _macro(self, macro: str, ref: Token, body: Process, value=None, binder: Token | None = None):
        ref_name = self._name(ref)
        if ref_name.kind is not NameKind.REF:
            raise PiSyntaxError(f"'{ref}' is not a reference name", *_pos(ref))
        bound = self._name(binder) if binder is not None else None
        return expand_macro(macro, ref_name, body, value=value, binder=bound, modulus=self.modulus)

    def m_read(self, children):
        ref, binder, body = children
        return self._macro("read", ref, body, binder=binder)

    def m_write(self, children):
        ref, value, body = children
        return self._macro("write", ref, body, value=value)

    def m_swap(self, children):
        ref, value, binder, body = children
        return self._macro("swap", ref, body, value=value, binder=binder)

    def m_faa(self, children):
        ref, value, binder, body = children
        return self._macro("faa", ref, body, value=value, binder=binder)

    def m_swapd(self, children):
        ref, value, binder, body = children
        return self._macro("swapD", ref, body, value=value, binder=binder)

    def m_faad(self, children):
        ref, value, binder, body = children
        return self._macro("faaD", ref, body, value=value, binder=binder)

    # stacks

    def stack_entry(self, children):
        name_tok, tag_tok = children
        tag = str(tag_tok).lower()
        if tag not in ("o", "i"):
            raise PiSyntaxError(f"stack tag must be o or i, got '{tag_tok}'", *_pos(tag_tok))
        name = self._name(name_tok)
        if name.kind is not NameKind.CONT:
            raise PiSyntaxError(f"'{name_tok}' is not a continuation name", *_pos(name_tok))
        return StackEntry(name, Tag.O if tag == "o" else Tag.I)

    def stack_lit(self, children):
        return tuple(c for c in children if c is not None)


# ── Public API ────────────────────────────────────────────────────────────────


def _raise_syntax(exc: UnexpectedInput) -> None:
    raise PiSyntaxError(f"unexpected input: {exc.get_context('', 40).strip()!r}", exc.line, exc.column)


def _kind_of(tree) -> NameKind:
    return {
        "k_out": NameKind.OUT,
        "k_in": NameKind.IN,
        "k_cont": NameKind.CONT,
        "k_ref": NameKind.REF,
        "k_val": NameKind.VAL,
    }[tree.data]


def _declare(unit: SourceUnit, ident: Token, kind: NameKind) -> None:
    if str(ident).startswith("_"):
        raise PiSyntaxError(f"identifiers starting with '_' are reserved: {ident}", *_pos(ident))
    previous = unit.declarations.get(str(ident))
    if previous is not None and previous is not kind:
        raise PiSyntaxError(f"'{ident}' declared both {previous.value} and {kind.value}", *_pos(ident))
    unit.declarations[str(ident)] = kind


def parse(text: str, val_size: int | None = None) -> SourceUnit:
    """Parse a whole ``.pi`` source unit."""
    try:
        tree = _PARSER.parse(text, start="unit")
    except UnexpectedInput as exc:
        _raise_syntax(exc)

    unit = SourceUnit()
    for item in tree.children:
        if item.data == "decl":
            kind_tree, names = item.children[0], item.children[1]
            for tok in names.children:
                _declare(unit, tok, _kind_of(kind_tree))
        elif item.data == "decl_domain":
            lo, hi = int(item.children[0]), int(item.children[1])
            if lo != 0 or hi < lo:
                raise PiSyntaxError("value domains are written 0..k", *_pos(item.children[0]))
            unit.domain = tuple(literal(v) for v in range(lo, hi + 1))
    if not unit.domain and val_size:
        unit.domain = tuple(literal(v) for v in range(val_size))

    builder = _Builder(unit)
    try:
        for item in tree.children:
            if item.data == "sort_decl":
                ident, *kinds = item.children
                unit.sorts[str(ident)] = tuple(_kind_of(k) for k in kinds if k is not None)
            elif item.data == "proc_def":
                ident, body = item.children
                unit.definitions[str(ident)] = builder.transform(body)
            elif item.data == "stack_def":
                ident, body = item.children
                unit.stacks[str(ident)] = builder.transform(body)
            elif item.data == "relation":
                cert = _relation(builder, item)
                unit.relations[cert.name] = cert
    except VisitError as exc:
        if isinstance(exc.orig_exc, CalculusError):
            raise exc.orig_exc from None
        raise

    sorting = collect_sorts(unit)
    unit.sorts = sorting
    unit.definitions = {k: with_sorts(p, sorting) for k, p in unit.definitions.items()}
    unit.stacks = {k: stack_with_sorts(s, sorting) for k, s in unit.stacks.items()}
    for cert in unit.relations.values():
        for t in cert.triples:
            t.lhs = with_sorts(t.lhs, sorting)
            t.rhs = with_sorts(t.rhs, sorting)
            if t.stack is not None:
                t.stack = stack_with_sorts(t.stack, sorting)
            if t.refs is not None:
                t.refs = frozenset(_sorted_name(n, sorting) for n in t.refs)
    logger.debug(
        "parsed unit: %d declarations, %d definitions, %d relations",
        len(unit.declarations),
        len(unit.definitions),
        len(unit.relations),
    )
    return unit


def _relation(builder: _Builder, item) -> RelationCert:
    name_tok, *rest = item.children
    cert = RelationCert(name=str(name_tok))
    for child in rest:
        if child.data == "rel_mode":
            mode = str(child.children[0]).strip('"')
            if mode not in MODES:
                raise PiSyntaxError(f"unknown relation mode '{mode}'", *_pos(child.children[0]))
            cert.mode = mode
        elif child.data == "rel_saturate":
            cert.saturate = True
        elif child.data == "rel_identity":
            cert.identity = True
        elif child.data == "rel_triple":
            cert.triples.append(_triple(builder, child))
    return cert


def _triple(builder: _Builder, entry) -> RelationTriple:
    values: dict[str, object] = {}
    for f in entry.children:
        tok = f.children[0]
        if f.data == "f_stack":
            text = str(tok).strip('"')
            values["stack"] = parse_stack(text, builder.unit) if text.strip() else ()
        elif f.data == "f_refs":
            ids = [s.strip() for s in str(tok).strip('"').split(",") if s.strip()]
            values["refs"] = frozenset(builder._name(Token("NAME", i, line=tok.line, column=tok.column)) for i in ids)
        elif f.data == "f_eta":
            eta = int(tok)
            if eta not in (0, 1):
                raise PiSyntaxError("eta must be 0 or 1", *_pos(tok))
            values["eta"] = eta
        elif f.data == "f_lhs":
            values["lhs"] = builder.transform(tok)
        elif f.data == "f_rhs":
            values["rhs"] = builder.transform(tok)
    if "lhs" not in values or "rhs" not in values:
        raise PiSyntaxError("a triple needs both lhs and rhs", entry.meta.line, entry.meta.column)
    return RelationTriple(line=entry.meta.line, **values)


def parse_process(text: str, unit: SourceUnit | None = None, reserved_ok: bool = True) -> Process:
    """Parse a single process against the declarations of ``unit``."""
    unit = unit or SourceUnit(domain=tuple(literal(v) for v in range(DEFAULT_VAL_SIZE)))
    try:
        tree = _PARSER.parse(text, start="proc")
        proc = _Builder(unit, reserved_ok=reserved_ok).transform(tree)
    except UnexpectedInput as exc:
        _raise_syntax(exc)
    except VisitError as exc:
        if isinstance(exc.orig_exc, CalculusError):
            raise exc.orig_exc from None
        raise
    return with_sorts(proc, collect_sorts(unit, extra=[proc]))


def parse_stack(text: str, unit: SourceUnit | None = None) -> Stack:
    unit = unit or SourceUnit()
    try:
        tree = _PARSER.parse(text, start="stack_lit")
        stack = _Builder(unit, reserved_ok=True).transform(tree)
        return stack_with_sorts(stack, unit.sorts)
    except UnexpectedInput as exc:
        _raise_syntax(exc)
    except VisitError as exc:
        if isinstance(exc.orig_exc, CalculusError):
            raise exc.orig_exc from None
        raise


# ── Sorts ─────────────────────────────────────────────────────────────────────


def collect_sorts(unit: SourceUnit, extra: list[Process] | None = None) -> dict[str, Sort]:
    """Declared sorts, completed by the first prefix found for every other subject."""
    sorting = dict(unit.sorts)
    procs = list(unit.definitions.values()) + list(extra or [])
    for cert in unit.relations.values():
        for t in cert.triples:
            procs.extend((t.lhs, t.rhs))
    for p in procs:
        for node in walk(p):
            if isinstance(node, Output):
                sorting.setdefault(node.subject.id, tuple(o.kind for o in node.objects))
            elif isinstance(node, Input):
                sorting.setdefault(node.subject.id, tuple(b.kind for b in node.binders))
    return sorting


def _sorted_name(n: Name, sorting: dict[str, Sort]) -> Name:
    if n.is_literal or n.sort is not None:
        return n
    sort = sorting.get(n.id)
    return Name(n.id, n.kind, sort) if sort is not None else n


def stack_with_sorts(stack: Stack, sorting: dict[str, Sort]) -> Stack:
    return tuple(StackEntry(_sorted_name(e.name, sorting), e.tag) for e in stack)


def with_sorts(p: Process, sorting: dict[str, Sort]) -> Process:
    def name(n: Name) -> Name:
        return _sorted_name(n, sorting)

    def obj(o):
        if isinstance(o, Plus):
            return Plus(name(o.left), name(o.right), o.modulus)
        return name(o)

    def go(q: Process) -> Process:
        if isinstance(q, Output):
            return Output(name(q.subject), tuple(obj(o) for o in q.objects))
        if isinstance(q, Input):
            return type(q)(name(q.subject), tuple(name(b) for b in q.binders), go(q.body))
        if isinstance(q, Res):
            return Res(name(q.binder), go(q.body))
        if isinstance(q, Par):
            return Par(tuple(go(r) for r in q.parts))
        if isinstance(q, Sum):
            return Sum(tuple(go(r) for r in q.branches))
        if isinstance(q, Tau):
            return Tau(go(q.body))
        if isinstance(q, Match):
            return Match(name(q.left), name(q.right), go(q.body))
        return q

    return go(p)


# ── Rendering ─────────────────────────────────────────────────────────────────


def _render_obj(o) -> str:
    return f"{o.left.id}+{o.right.id}" if isinstance(o, Plus) else o.id


def render(p: Process) -> str:
    """Render ``p`` in the concrete syntax accepted by ``parse_process``."""
    if isinstance(p, Res):
        binders = []
        while isinstance(p, Res):
            binders.append(p.binder.id)
            p = p.body
        return f"new {', '.join(binders)}. {render(p)}"
    if isinstance(p, Par):
        return " | ".join(_render_component(q) for q in p.parts)
    if isinstance(p, Sum):
        return " + ".join(_render_prefix(q) for q in p.branches)
    return _render_prefix(p)


def _render_component(p: Process) -> str:
    if isinstance(p, (Res, Par)):
        return f"({render(p)})"
    return render(p)


def _render_prefix(p: Process) -> str:
    if isinstance(p, Nil):
        return "0"
    if isinstance(p, Output):
        return f"{p.subject.id}<{', '.join(_render_obj(o) for o in p.objects)}>"
    if isinstance(p, Input):
        bang = "!" if p.replicated else ""
        binders = ", ".join(b.id for b in p.binders)
        return f"{bang}{p.subject.id}({binders}).{_render_body(p.body)}"
    if isinstance(p, Tau):
        return f"tau.{_render_body(p.body)}"
    if isinstance(p, Match):
        return f"[{p.left.id}={p.right.id}]{_render_body(p.body)}"
    return f"({render(p)})"


def _render_body(p: Process) -> str:
    if isinstance(p, (Par, Sum, Res)):
        return f"({render(p)})"
    return _render_prefix(p)


def render_stack(stack: Stack) -> str:
    return ", ".join(f"{e.name.id}^{e.tag.value}" for e in stack) or "empty"


__all__ = [
    "ContinuationInMatch",
    "GuardGrammarViolation",
    "PiSyntaxError",
    "RelationCert",
    "RelationTriple",
    "SourceUnit",
    "UndeclaredName",
    "collect_sorts",
    "parse",
    "parse_process",
    "parse_stack",
    "render",
    "render_stack",
    "stack_with_sorts",
    "with_sorts",
]
