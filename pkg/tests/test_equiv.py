"""Tests for the bisimilarity deciders, witnesses and the mode dispatcher."""

import asyncio

import pytest

from calculus.lts import StateSpace, StepContext
from calculus.parser import parse_stack
from calculus.syntax import NIL
from discipline.sequential import SeqConfig
from equiv.deciders import ConfigurationMismatch, bisim_ordinary, bisim_seq, decide, seq_config
from equiv.dispatch import Query, acheck_many, check
from equiv.engine import replay
from equiv.games import Game
from equiv.verdict import Outcome


class TestOrdinary:
    def test_tau_is_invisible(self, pi):
        assert bisim_ordinary(pi("tau.x<>"), pi("x<>")).outcome is Outcome.YES

    def test_input_reemitting_its_message(self, pi):
        assert bisim_ordinary(pi("u().u<>"), NIL).outcome is Outcome.YES

    def test_missing_output(self, pi):
        verdict = bisim_ordinary(pi("x<>"), NIL)
        assert verdict.outcome is Outcome.NO
        assert verdict.witness[0].action == "x<>"
        assert verdict.witness[-1].defender is None

    def test_witness_replays(self, pi):
        space = StateSpace()
        game = Game(space)
        root = game.node(None, space.add(pi("y().x<>")), space.add(pi("y().0")))
        verdict = decide(game, root)
        assert verdict.outcome is Outcome.NO
        assert replay(verdict.witness, game, root)

    def test_swap_is_not_atomic_without_types(self, corpus_unit):
        unit = corpus_unit("swap_faa.pi")
        verdict = bisim_ordinary(
            unit.process("Swap"), unit.process("SwapD"), ctx=StepContext(domain=unit.domain)
        )
        assert verdict.outcome is Outcome.NO
        assert verdict.witness[0].action.startswith("l(")

    def test_records_end_with_verdict(self, pi):
        records = bisim_ordinary(pi("x<>"), NIL).records()
        assert records[0] == ("mode", "ordinary")
        assert records[-1] == ("VERDICT", "NO")
        assert any(k == "witness.0" for k, _ in records)


class TestSequential:
    def test_expansion_holds_only_with_types(self, corpus_unit):
        unit = corpus_unit("expansion.pi")
        l1, r1 = unit.process("L1"), unit.process("R1")
        assert bisim_seq(SeqConfig(1, l1), SeqConfig(1, r1)).outcome is Outcome.YES
        assert bisim_ordinary(l1, r1).outcome is Outcome.NO

    def test_thread_indicators_must_agree(self, pi):
        with pytest.raises(ConfigurationMismatch, match="thread indicators differ"):
            bisim_seq(SeqConfig(0, NIL), SeqConfig(1, pi("x<>")))

    def test_configuration_must_be_typed(self, pi):
        with pytest.raises(ConfigurationMismatch, match="not typed at eta=1"):
            bisim_seq(SeqConfig(1, NIL), SeqConfig(1, pi("x<>")))

    def test_seq_config_derives_eta(self, pi):
        assert seq_config(pi("x<>")).eta == 1
        with pytest.raises(ConfigurationMismatch):
            seq_config(pi("x<> | y<>"))


class TestDispatch:
    def test_seq_mode_derives_typing(self, corpus_unit):
        unit = corpus_unit("expansion.pi")
        verdict = check("seq", unit.process("L2"), unit.process("R2"))
        assert verdict.outcome is Outcome.YES
        assert verdict.mode == "seq"

    def test_wb_forwarder(self, corpus_unit):
        unit = corpus_unit("forwarder.pi")
        verdict = check(
            "wb",
            unit.process("Global"),
            unit.process("Local"),
            parse_stack("p^o", unit),
            ctx=StepContext(domain=unit.domain),
        )
        assert verdict.outcome is Outcome.YES

    @pytest.mark.parametrize("rhs, expected", [("Local", Outcome.YES), ("Dropped", Outcome.NO)])
    def test_forwarder_in_answering_contexts(self, corpus_unit, rhs, expected):
        unit = corpus_unit("forwarder.pi")
        verdict = check(
            "barbed-wb-raw",
            unit.process("Global"),
            unit.process(rhs),
            parse_stack("p^o", unit),
            ctx=StepContext(domain=unit.domain),
        )
        assert verdict.outcome is expected
        assert verdict.mode == "barbed-wb-raw"

    def test_unknown_mode(self, pi):
        with pytest.raises(ValueError, match="unknown mode"):
            check("weak", pi("x<>"), pi("x<>"))

    def test_acheck_many_keeps_order(self, pi):
        queries = [
            Query("ordinary", pi("tau.x<>"), pi("x<>")),
            Query("ordinary", pi("x<>"), NIL),
            Query("seq", pi("x<>"), pi("tau.x<>"), 1),
        ]
        verdicts = asyncio.run(acheck_many(queries, budget=2))
        assert [v.outcome for v in verdicts] == [Outcome.YES, Outcome.NO, Outcome.YES]
