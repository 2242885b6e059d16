"""Tests for context sampling and barbed spot checks."""

from calculus.lts import StepContext
from calculus.parser import parse_stack
from calculus.syntax import NIL, StaticContext
from equiv.games import SeqTyping
from equiv.spotcheck import TypedContext, barbed_spotcheck, sample_contexts
from equiv.verdict import Outcome


class TestSampling:
    def test_empty_context_first(self, corpus_unit):
        unit = corpus_unit("expansion.pi")
        contexts = sample_contexts(unit.process("L1"), unit.process("R1"), SeqTyping(1), "seq", n=5)
        assert contexts[0].label == "empty"
        assert 1 <= len(contexts) <= 5

    def test_deterministic_in_seed(self, corpus_unit):
        unit = corpus_unit("expansion.pi")
        lhs, rhs = unit.process("L1"), unit.process("R1")
        first = [c.label for c in sample_contexts(lhs, rhs, SeqTyping(1), "seq", n=4, seed=3)]
        again = [c.label for c in sample_contexts(lhs, rhs, SeqTyping(1), "seq", n=4, seed=3)]
        assert first == again

    def test_contexts_respect_the_thread(self, corpus_unit):
        unit = corpus_unit("expansion.pi")
        contexts = sample_contexts(unit.process("L1"), unit.process("R1"), SeqTyping(1), "seq", n=100)
        assert all(c.typing.eta == 1 for c in contexts)
        assert not any(c.label.startswith("x<") for c in contexts)

    def test_ordinary_contexts_are_untyped(self, pi):
        contexts = sample_contexts(pi("x<>"), pi("u().0"), None, "ordinary", n=100)
        assert all(c.typing is None for c in contexts)
        assert any(c.label == "x<>" for c in contexts)


class TestSpotcheck:
    def test_separated_by_barbs(self, pi):
        contexts = [TypedContext(StaticContext(), SeqTyping(1), "empty")]
        verdict = barbed_spotcheck(pi("x<>"), NIL, contexts, "seq")
        assert verdict.outcome is Outcome.NO
        assert verdict.failures[0].action == "barbs"
        assert verdict.note == "1 contexts"

    def test_equivalent_pair_survives(self, corpus_unit):
        unit = corpus_unit("expansion.pi")
        lhs, rhs = unit.process("L1"), unit.process("R1")
        contexts = sample_contexts(lhs, rhs, SeqTyping(1), "seq", n=6)
        verdict = barbed_spotcheck(lhs, rhs, contexts, "seq", budget=2)
        assert verdict.outcome is not Outcome.NO
        assert verdict.relation_size == len(contexts)


class TestRawWellBracketed:
    def _pair(self, corpus_unit, rhs):
        unit = corpus_unit("forwarder.pi")
        return unit.process("Global"), unit.process(rhs), parse_stack("p^o", unit), unit

    def test_calls_are_answered(self, corpus_unit):
        lhs, rhs, stack, _ = self._pair(corpus_unit, "Local")
        contexts = sample_contexts(lhs, rhs, stack, "wb-raw", n=100)
        assert all(c.typing is None for c in contexts)
        assert any(c.label.startswith("x(..).") for c in contexts)
        assert all("p" in {n.id for n in c.ctx.restrictions} for c in contexts)

    def test_global_continuation_matches_forwarder(self, corpus_unit):
        lhs, rhs, stack, unit = self._pair(corpus_unit, "Local")
        contexts = sample_contexts(lhs, rhs, stack, "wb-raw", n=100)
        verdict = barbed_spotcheck(lhs, rhs, contexts, "wb-raw", ctx=StepContext(domain=unit.domain))
        assert verdict.outcome is Outcome.YES
        assert verdict.mode == "barbed-wb-raw"

    def test_dropped_answer_is_separated(self, corpus_unit):
        lhs, rhs, stack, unit = self._pair(corpus_unit, "Dropped")
        contexts = sample_contexts(lhs, rhs, stack, "wb-raw", n=100)
        verdict = barbed_spotcheck(lhs, rhs, contexts, "wb-raw", ctx=StepContext(domain=unit.domain))
        assert verdict.outcome is Outcome.NO
        assert verdict.failures[0].lhs.startswith("x(..).")
