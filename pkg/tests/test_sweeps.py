"""Tests for the property sweeps."""

import pytest

from calculus.parser import parse_stack
from experiments import PropertyResult, run_sweeps
from experiments.sweeps import _erasure, _seq_subject_reduction, _traces, _wb_subject_reduction


class TestProperties:
    def test_result_holds(self):
        assert PropertyResult(name="p", checked=3).holds
        assert not PropertyResult(name="p", checked=3, violations=1).holds

    def test_seq_subject_reduction_on_corpus(self, corpus_unit):
        unit = corpus_unit("thread.pi")
        assert _seq_subject_reduction(unit.process("PQ"), 1) is None

    def test_wb_subject_reduction_on_corpus(self, corpus_unit):
        unit = corpus_unit("typings_wb.pi")
        assert _wb_subject_reduction(unit.process("Call"), unit.stacks["Top"]) is None

    def test_erasure(self, corpus_unit):
        unit = corpus_unit("typings_wb.pi")
        assert _erasure(unit.process("Relay"), unit.stacks["Top"]) is None
        assert _erasure(unit.process("Answer"), ()) is not None

    def test_traces_of_forwarder(self, corpus_unit):
        unit = corpus_unit("forwarder.pi")
        assert _traces(unit.process("Global"), parse_stack("p^o", unit)) is None


@pytest.mark.slow
def test_sweeps_hold():
    report = run_sweeps(count=10, max_size=6, seed=0, persist=False)
    assert len(report.results) == 8
    assert report.ok, [r.examples for r in report.results if not r.holds]
