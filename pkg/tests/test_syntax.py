"""Tests for names, free names, substitution and structural congruence."""

import pytest

from calculus.syntax import (
    NIL,
    Input,
    KindMismatch,
    Name,
    NameKind,
    Output,
    Par,
    Res,
    StaticContext,
    bound_names,
    canonical_form,
    congruent,
    free_names,
    free_names_of_kind,
    fresh_name,
    literal,
    par,
    plug,
    restrict,
    size,
    substitute,
)
from scripts.generate_processes import ProcessGenerator


def _ids(names) -> set[str]:
    return {n.id for n in names}


class TestFreeNames:
    def test_output_without_binders(self, pi):
        assert _ids(free_names(pi("x<a>"))) == {"x", "a"}

    def test_restriction_binds(self, pi):
        assert free_names(pi("new x. x<>")) == frozenset()

    def test_thread_example(self, pi):
        p = pi("u().(x<> | y().x<>) | z().y<> | v<>")
        assert _ids(free_names(p)) == {"u", "x", "y", "z", "v"}

    def test_input_binders_are_not_free(self, pi):
        assert _ids(free_names(pi("u(c).x<c>"))) == {"u", "x"}

    def test_literals_are_not_free_in_matches(self, pi):
        assert _ids(free_names(pi("[0=1]u().x<>"))) == {"u", "x"}

    def test_by_kind(self, pi):
        p = pi("u().x<> | p<>")
        assert _ids(free_names_of_kind(p, NameKind.CONT)) == {"p"}

    def test_bound_names(self, pi):
        assert _ids(bound_names(pi("new b. u(c).x<b, c>"))) == {"b", "c"}


class TestSubstitution:
    def test_plain(self, pi):
        result = substitute(pi("p<a>"), [Name("b", NameKind.IN)], [Name("a", NameKind.IN)])
        assert congruent(result, pi("p<b>"))

    def test_avoids_capture(self, pi):
        p = pi("new b.(x<b> | y<a>)")
        result = substitute(p, [Name("b", NameKind.IN)], [Name("a", NameKind.IN)])
        assert _ids(free_names(result)) == {"x", "y", "b"}
        assert congruent(result, pi("new c.(x<c> | y<b>)"))
        assert not congruent(result, pi("new b.(x<b> | y<b>)"))

    def test_value_into_continuation(self, pi):
        result = substitute(pi("c<m>"), [Name("n", NameKind.VAL)], [Name("m", NameKind.VAL)])
        assert congruent(result, pi("c<n>"))

    def test_kind_mismatch(self, pi):
        with pytest.raises(KindMismatch):
            substitute(pi("x<>"), [Name("u", NameKind.IN, ())], [Name("x", NameKind.OUT, ())])

    def test_arity_mismatch(self, pi):
        with pytest.raises(ValueError, match="arity"):
            substitute(pi("x<>"), [], [Name("x", NameKind.OUT, ())])


class TestCongruence:
    def test_par_commutes(self, pi):
        assert congruent(pi("x<> | y<>"), pi("y<> | x<>"))

    def test_par_unit(self, pi):
        assert congruent(pi("x<> | 0"), pi("x<>"))

    def test_alpha_conversion(self, pi):
        assert congruent(pi("new b. x<b>"), pi("new c. x<c>"))

    def test_sum_commutes(self, pi):
        assert congruent(pi("u().x<> + v().y<>"), pi("v().y<> + u().x<>"))

    def test_distinguishes_subjects(self, pi):
        assert not congruent(pi("x<>"), pi("y<>"))

    @pytest.mark.parametrize(
        "left, right",
        [
            ("(x<> | y<>) | z<>", "x<> | (y<> | z<>)"),
            ("new x. (x<> | y<>)", "(new x. x<>) | y<>"),
            ("new x. 0", "0"),
            ("new x. new y. (x<> | y<>)", "new y. new x. (y<> | x<>)"),
            ("u().(x<> | 0)", "u().x<>"),
        ],
    )
    def test_axiom_instances(self, pi, left, right):
        assert congruent(pi(left), pi(right))

    def test_scope_does_not_cross_free_occurrences(self, pi):
        assert not congruent(pi("(new x. x<>) | x<>"), pi("new x. (x<> | x<>)"))

    @pytest.mark.parametrize("seed", [0, 1])
    def test_agrees_with_axioms_on_small_terms(self, seed):
        gen = ProcessGenerator(seed, 6)
        spare = Name("w0", NameKind.OUT)
        for _ in range(20):
            p, q = gen.seq(gen.rng.randint(0, 1)), gen.seq(0, 3)
            assert congruent(Par((p, NIL)), p)
            assert congruent(Par((p, q)), Par((q, p)))
            assert congruent(Res(spare, p), p)
            assert congruent(Res(spare, Par((p, Output(spare)))), Par((p, Res(spare, Output(spare)))))

    def test_symmetric_binders_have_one_form(self):
        cs = [Name(f"c{i}", NameKind.OUT, ()) for i in range(6)]

        def ring(order, links):
            return restrict(order, Par(tuple(Input(cs[a], (), Output(cs[b])) for a, b in links)))

        six = [(i, (i + 1) % 6) for i in range(6)]
        shuffled = [cs[i] for i in (0, 2, 4, 1, 3, 5)]
        assert canonical_form(ring(cs, six)).key == canonical_form(ring(shuffled, six)).key
        assert congruent(ring(cs, six), ring(shuffled[::-1], six))
        two_triangles = [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]
        assert not congruent(ring(cs, six), ring(cs, two_triangles))

    def test_interchangeable_binders(self):
        cs = [Name(f"c{i}", NameKind.OUT, ()) for i in range(7)]
        left = Par(tuple(Output(c) for c in cs))
        right = Par(tuple(Output(c) for c in reversed(cs)))
        for a, b in zip(cs, reversed(cs)):
            left, right = Res(a, left), Res(b, right)
        assert canonical_form(left).key == canonical_form(right).key


class TestStaticContexts:
    def test_empty_context(self, pi):
        p = pi("x<>")
        assert congruent(plug(StaticContext(), p), p)

    def test_tester_context(self, pi, decls):
        z = Name("z", NameKind.OUT, ())
        ctx = StaticContext((z,), pi("z<> | z().y<>"))
        assert congruent(plug(ctx, pi("x<>")), pi("new z.(z<> | z().y<> | x<>)"))


class TestHelpers:
    def test_par_drops_nil(self):
        x = Output(Name("x", NameKind.OUT, ()))
        assert par(NIL, x) == x
        assert par() == NIL

    def test_size(self, pi):
        assert size(NIL) == 1
        assert size(pi("u().x<>")) == 2

    def test_fresh_name_skips_taken(self):
        n = fresh_name(NameKind.OUT, {"_xf0"})
        assert n.id == "_xf1"
        assert n.kind is NameKind.OUT

    def test_literal(self):
        assert literal(2).is_literal
        assert not Name("m", NameKind.VAL).is_literal
