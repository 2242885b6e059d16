"""Tests for the concrete syntax: declarations, processes, stacks and relations."""

import pytest

from calculus.parser import (
    ContinuationInMatch,
    GuardGrammarViolation,
    PiSyntaxError,
    UndeclaredName,
    parse,
    parse_process,
    parse_stack,
    render,
    render_stack,
)
from calculus.syntax import NIL, Name, NameKind, Output, congruent


class TestParse:
    def test_single_output(self):
        unit = parse("decl out x. proc P = x<>")
        assert unit.process("P") == Output(Name("x", NameKind.OUT, ()), ())

    def test_thread_file(self, corpus_unit):
        unit = corpus_unit("thread.pi")
        assert set(unit.definitions) == {"P", "Q", "PQ", "TwoThreads"}
        assert unit.declarations["u"] is NameKind.IN

    def test_definitions_are_inlined(self, corpus_unit):
        unit = corpus_unit("thread.pi")
        pq = unit.process("PQ")
        assert {n.id for n in pq.fn} == {"u", "v", "x", "y", "z"}

    def test_sorts_come_from_usage(self, corpus_unit):
        unit = corpus_unit("forwarder.pi")
        assert unit.sorts["x"] == (NameKind.VAL, NameKind.CONT)

    def test_value_domain(self, corpus_unit):
        unit = corpus_unit("rewrite.pi")
        assert [v.id for v in unit.domain] == ["0", "1", "2"]

    def test_default_domain(self):
        unit = parse("decl out c\nproc P = c<1>", val_size=3)
        assert [v.id for v in unit.domain] == ["0", "1", "2"]

    def test_relation_block(self, corpus_unit):
        cert = corpus_unit("expansion.pi").relations["Expand1"]
        assert cert.mode == "seq"
        assert cert.identity
        assert len(cert.triples) == 1
        assert cert.triples[0].eta == 1

    def test_saturated_relation(self, corpus_unit):
        cert = corpus_unit("awkward.pi").relations["Awkward"]
        assert cert.saturate
        assert cert.mode == "wb-upto"
        assert render_stack(cert.triples[1].stack) == "q2^i, p2^o, r1^i, p1^o"

    def test_unknown_process(self, corpus_unit):
        with pytest.raises(UndeclaredName):
            corpus_unit("thread.pi").process("Missing")


class TestErrors:
    def test_undeclared_name(self):
        with pytest.raises(UndeclaredName, match="undeclared name 'w'"):
            parse("decl out x\nproc P = w<>")

    def test_position_is_reported(self):
        with pytest.raises(PiSyntaxError) as exc:
            parse("decl out x\nproc P = x<> | | x<>")
        assert exc.value.line == 2

    def test_sum_of_outputs(self):
        with pytest.raises(GuardGrammarViolation, match="summands must be guards"):
            parse("decl out x, y\nproc P = x<> + y<>")

    def test_match_body_must_be_guard(self):
        with pytest.raises(GuardGrammarViolation, match="match body"):
            parse("decl out x\ndecl val m, n\nproc P = [m=n]x<>")

    @pytest.mark.parametrize(
        "source",
        [
            "decl in u, v\nproc P = u().0 + !v().0",
            "decl in u\ndecl val m, n\nproc P = [m=n]!u().0",
        ],
    )
    def test_replication_is_not_a_guard(self, source):
        with pytest.raises(GuardGrammarViolation):
            parse(source)

    def test_continuation_in_match(self):
        with pytest.raises(ContinuationInMatch):
            parse("decl out x\ndecl in u\ndecl cont p, q\nproc P = [p=q]u().x<>")

    def test_conflicting_declarations(self):
        with pytest.raises(PiSyntaxError, match="declared both"):
            parse("decl out x\ndecl in x")

    def test_reserved_identifiers(self):
        with pytest.raises(PiSyntaxError, match="reserved"):
            parse("decl out _x0")

    def test_value_outside_domain(self):
        with pytest.raises(PiSyntaxError, match="outside the declared domain"):
            parse("decl out c\ndecl val 0..1\nproc P = c<2>")

    def test_unknown_relation_mode(self):
        with pytest.raises(PiSyntaxError, match="unknown relation mode"):
            parse('decl out x\nrelation R mode="fast" { triple lhs = x<>; rhs = x<>; }')


class TestStacks:
    def test_named_stacks(self, corpus_unit):
        unit = corpus_unit("typings_wb.pi")
        assert render_stack(unit.stacks["Open"]) == "q^o, q^i, p^o"

    def test_empty_stack(self):
        assert parse_stack("") == ()
        assert render_stack(()) == "empty"

    def test_bad_tag(self, decls):
        with pytest.raises(PiSyntaxError, match="stack tag"):
            parse_stack("p^x", decls)

    def test_not_a_continuation(self, decls):
        with pytest.raises(PiSyntaxError, match="not a continuation"):
            parse_stack("x^o", decls)


class TestRender:
    def test_nil(self):
        assert render(NIL) == "0"

    @pytest.mark.parametrize(
        "text",
        [
            "u().(x<> | y().x<>) | z().y<> | v<>",
            "new q. (x<q> | q().p<>)",
            "!x(c).c<> | u().x<a>",
            "u().x<> + v().tau.y<>",
            "[m=n]u().x<> | read l(m).c<m>",
        ],
    )
    def test_render_parses_back(self, decls, text):
        p = parse_process(text, decls)
        assert congruent(parse_process(render(p), decls), p)
