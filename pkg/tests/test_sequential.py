"""Tests for the sequential type system and type-allowed transitions."""

import pytest

from calculus.lts import step
from calculus.syntax import NIL, NameKind
from discipline.sequential import (
    SeqConfig,
    Sorting,
    SortViolation,
    barbs,
    check_sorting,
    evolve_eta,
    inactive_has_no_interaction,
    inactive_quiesces,
    no_disjoint_interactions,
    seq_derivation,
    type_allowed,
    typecheck_seq,
)


def _by_key(p, key):
    return next(t for t in step(p) if t.action.key == key)


class TestTypecheck:
    def test_thread_example(self, corpus_unit):
        assert typecheck_seq(corpus_unit("thread.pi").process("P")) == 1

    def test_inert_and_active(self, pi):
        assert typecheck_seq(NIL) == 0
        assert typecheck_seq(pi("x<>")) == 1
        assert typecheck_seq(pi("u<>")) == 0
        assert typecheck_seq(pi("x().y<>")) == 0

    def test_two_threads(self, pi):
        failure = seq_derivation(pi("x<> | y<>"))
        assert failure.rule == "Par"
        assert typecheck_seq(pi("x<> | y<>")) is None

    def test_replicated_input_controlled(self, pi):
        assert seq_derivation(pi("!u().x<>")).rule == "Rep"

    def test_input_must_pass_the_thread(self, pi):
        assert seq_derivation(pi("u().0")).rule == "Inp"

    def test_match_guard_inactive(self, pi):
        assert seq_derivation(pi("[0=0]u().x<>")).rule == "Mat"

    def test_summands_agree(self, pi):
        assert seq_derivation(pi("u().x<> + x().y<>")).rule == "Sum"

    def test_failure_names_the_subterm(self, pi):
        failure = seq_derivation(pi("x<> | y<>"))
        assert "x<>" in failure.subterm
        assert str(failure).startswith("Par:")


class TestTypeAllowed:
    def test_active_output(self, pi):
        p = pi("x<a>")
        assert type_allowed(SeqConfig(1, p), _by_key(p, "x<a>").action)

    def test_only_input_controlled_inputs_when_active(self, corpus_unit):
        p = corpus_unit("thread.pi").process("P")
        config = SeqConfig(1, p)
        assert type_allowed(config, _by_key(p, "u()").action)
        assert not type_allowed(config, _by_key(p, "z()").action)
        assert not type_allowed(config, _by_key(p, "v<>").action)

    def test_inactive_allows_everything(self, corpus_unit):
        p = corpus_unit("thread.pi").process("P")
        assert all(type_allowed(SeqConfig(0, p), t.action) for t in step(p))

    def test_refusal_has_a_reason(self, pi):
        p = pi("z().y<>")
        verdict = type_allowed(SeqConfig(1, p), _by_key(p, "z()").action)
        assert not verdict
        assert "thread" in verdict.reason


class TestEvolution:
    def test_input_at_output_controlled_takes_thread(self, pi):
        p = pi("x().y<>")
        t = _by_key(p, "x()")
        assert evolve_eta(SeqConfig(0, p), t.action, t.target).eta == 1

    def test_output_releases_thread(self, pi):
        p = pi("x<a> | y().z<>")
        t = _by_key(p, "x<a>")
        assert evolve_eta(SeqConfig(1, p), t.action, t.target).eta == 0

    def test_input_controlled_keeps_thread(self, corpus_unit):
        p = corpus_unit("expansion.pi").process("R1")
        t = _by_key(p, "u()")
        after = evolve_eta(SeqConfig(1, p), t.action, t.target)
        assert after.eta == 1
        assert typecheck_seq(after.proc) == 1


class TestBarbs:
    def test_active_output(self, pi):
        assert barbs(SeqConfig(1, pi("x<a>"))) == frozenset({"x"})

    def test_active_without_transitions(self, corpus_unit):
        assert barbs(SeqConfig(1, corpus_unit("singular.pi").process("Idle"))) == frozenset()

    def test_guarded_outputs_are_not_barbs(self, corpus_unit):
        assert barbs(SeqConfig(0, corpus_unit("z_example.pi").process("P"))) == frozenset()

    def test_forbidden_output_is_not_a_barb(self, pi):
        assert barbs(SeqConfig(1, pi("x<> | u<>"))) == frozenset({"x"})


class TestSorting:
    def test_wb_convention_accepts_trailing_continuation(self, pi):
        sorting = Sorting(sorts={"x": (NameKind.VAL, NameKind.CONT)}, wb=True)
        assert check_sorting(sorting, pi("x<m, q>"))

    def test_wrong_arity(self, pi):
        sorting = Sorting(sorts={"x": (NameKind.VAL,)})
        with pytest.raises(SortViolation, match="x carries"):
            check_sorting(sorting, pi("x<m, q>"))

    def test_continuation_must_be_last(self, pi):
        with pytest.raises(SortViolation, match="trailing continuation"):
            check_sorting(Sorting(wb=True), pi("x<q, m>"))


class TestStructuralProperties:
    def test_single_interaction(self, corpus_unit):
        assert no_disjoint_interactions(corpus_unit("thread.pi").process("PQ"))

    def test_disjoint_interactions_detected(self, pi):
        assert not no_disjoint_interactions(pi("x<> | x().z<> | y<> | y().z<>"))

    def test_inactive_process_cannot_interact(self, pi):
        assert inactive_has_no_interaction(pi("x().y<> | u<>"))

    def test_inactive_process_quiesces(self, pi):
        assert inactive_quiesces(pi("!x().y<> | u<>"))
