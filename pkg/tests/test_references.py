"""Tests for the reference encoding, accessible references and the input constraint."""

import pytest

from calculus.lts import TAU, Action
from calculus.syntax import Input, Name, NameKind, Output, congruent, literal, par
from discipline.references import (
    FreshnessViolation,
    MultipleOutputs,
    RefEnv,
    accessible_refs,
    expand_macro,
    refs_constraint,
)
from discipline.sequential import SeqConfig, type_allowed

L = Name("l", NameKind.REF)
M = Name("m", NameKind.VAL)
N = Name("n", NameKind.VAL)
C = Name("c", NameKind.OUT)
BODY = Output(C, (M,))


def _ids(names) -> set[str]:
    return {n.id for n in names}


class TestAccessibleRefs:
    def test_unguarded_output(self, pi):
        assert _ids(accessible_refs(pi("l<0> | read l(m).c<m>"))) == {"l"}

    def test_output_after_input_is_not_accessible(self, pi):
        assert accessible_refs(pi("read l(m).c<m>")) == frozenset()

    def test_two_outputs(self, pi):
        with pytest.raises(MultipleOutputs):
            accessible_refs(pi("l<0> | l<1>"))

    def test_restricted_reference(self, pi):
        p = pi("new l.(l<0>)")
        assert accessible_refs(p) == frozenset()
        (opened,) = accessible_refs(p, open_restrictions=True)
        assert opened.kind is NameKind.REF

    def test_awkward_server_state(self, corpus_unit):
        p1 = corpus_unit("awkward.pi").process("P1")
        assert accessible_refs(p1) == frozenset()
        assert len(accessible_refs(p1, open_restrictions=True)) == 1


class TestConstraint:
    def test_input_at_held_reference_refused(self):
        action = Action("in", L, (literal(1),))
        assert not refs_constraint(RefEnv(frozenset({L})), action)

    def test_input_allowed_without_the_reference(self):
        assert refs_constraint(RefEnv(), Action("in", L, (literal(1),)))

    def test_tau_always_allowed(self):
        assert refs_constraint(RefEnv(frozenset({L})), TAU)

    def test_tracked_output_stays_internal(self, pi):
        p = pi("l<0>")
        config = SeqConfig(0, p, frozenset({L}))
        assert not type_allowed(config, Action("out", L, (literal(0),)))


class TestMacros:
    def test_read(self):
        assert expand_macro("read", L, BODY, binder=M) == Input(L, (M,), par(Output(L, (M,)), BODY))

    def test_swap(self):
        assert expand_macro("swap", L, BODY, value=N, binder=M) == Input(L, (M,), par(Output(L, (N,)), BODY))

    def test_swap_decomposed(self):
        fresh = Name("m2", NameKind.VAL)
        got = expand_macro("swapD", L, BODY, value=N, binder=M, fresh=fresh)
        inner = Input(L, (fresh,), par(Output(L, (N,)), BODY))
        assert congruent(got, Input(L, (M,), par(Output(L, (M,)), inner)))

    def test_faa_folds_literals(self):
        got = expand_macro("faa", L, BODY, value=literal(1), binder=M, modulus=3)
        assert got.subject == L
        assert got.binders == (M,)

    def test_binder_captures_value(self):
        with pytest.raises(FreshnessViolation):
            expand_macro("swap", L, BODY, value=M, binder=M)

    def test_write_fresh_name_must_be_unused(self):
        with pytest.raises(FreshnessViolation):
            expand_macro("write", L, BODY, value=N, fresh=M)

    def test_unknown_macro(self):
        with pytest.raises(ValueError, match="unknown macro"):
            expand_macro("cas", L, BODY)
