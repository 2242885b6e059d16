"""Tests for trace generation, question/answer matching and trace dumps."""

import pytest

from discipline.brackets import WbConfig
from traces import (
    NotDiscreet,
    StackDeltaMismatch,
    StepKind,
    UniquenessViolation,
    check_wellbracketed,
    classify,
    dump_trace,
    generate_traces,
    load_trace,
    match_qa,
    matched_segments,
    segments_are_matched,
)

NESTED = """\
new q. x<b,q>\tp^o\tq^i, p^o
q(c)\tq^i, p^o\tp^o
p<c>\tp^o\tempty
"""

CROSSING = """\
new p'. x<b,p'>\tempty\tempty
new q'. x<b,q'>\tempty\tempty
p'()\tempty\tempty
q'()\tempty\tempty
"""


@pytest.fixture
def wb_unit(corpus_unit):
    return corpus_unit("typings_wb.pi")


@pytest.fixture
def call_traces(wb_unit):
    config = WbConfig(wb_unit.stacks["Top"], wb_unit.process("Call"))
    return generate_traces(config, depth=3, budget=1)


class TestGenerate:
    def test_depth_zero(self, wb_unit):
        config = WbConfig(wb_unit.stacks["Top"], wb_unit.process("Call"))
        traces = generate_traces(config, depth=0)
        assert len(traces) == 1
        assert len(traces[0]) == 0

    def test_call_answer_return(self, call_traces):
        shapes = [[len(s.after) for s in t.steps] for t in call_traces]
        assert [2, 1, 0] in shapes

    def test_prefixes_included(self, call_traces):
        lengths = {len(t) for t in call_traces}
        assert lengths == {0, 1, 2, 3}

    def test_generated_traces_are_wellbracketed(self, call_traces):
        for t in call_traces:
            classify(t)
            assert check_wellbracketed(t)
            assert segments_are_matched(t)

    def test_needs_a_discreet_process(self, wb_unit):
        with pytest.raises(NotDiscreet, match="discreet process"):
            generate_traces(WbConfig(wb_unit.stacks["Top"], wb_unit.process("OpenCall")))

    def test_needs_a_clean_stack(self, wb_unit):
        with pytest.raises(NotDiscreet, match="clean stack"):
            generate_traces(WbConfig(wb_unit.stacks["Open"], wb_unit.process("Call")))


class TestMatching:
    def test_classify(self, wb_unit):
        trace = load_trace(NESTED, wb_unit)
        assert classify(trace) == [StepKind.QUESTION, StepKind.ANSWER, StepKind.ANSWER]

    def test_pairs_and_segments(self, wb_unit):
        trace = load_trace(NESTED, wb_unit)
        assert match_qa(trace).pairs == [(0, 1)]
        assert matched_segments(trace) == [(0, 1)]
        assert segments_are_matched(trace)

    def test_crossing_answers(self, wb_unit):
        trace = load_trace(CROSSING, wb_unit)
        assert not check_wellbracketed(trace)
        assert match_qa(trace).pairs == [(0, 2), (1, 3)]

    def test_stack_delta_mismatch(self, wb_unit):
        trace = load_trace("p<c>\tp^o\tp^o\n", wb_unit)
        with pytest.raises(StackDeltaMismatch, match="step 0 is a answer"):
            classify(trace)

    def test_ambiguous_answer(self, wb_unit):
        trace = load_trace("new q. x<b,q>\tempty\tempty\nnew q. x<c,q>\tempty\tempty\nq()\tempty\tempty\n", wb_unit)
        with pytest.raises(UniquenessViolation, match="matches questions"):
            match_qa(trace)

    def test_question_answered_twice(self, wb_unit):
        trace = load_trace("new q. x<b,q>\tempty\tempty\nq()\tempty\tempty\nq()\tempty\tempty\n", wb_unit)
        with pytest.raises(UniquenessViolation, match="answered twice"):
            match_qa(trace)


class TestDump:
    def test_round_trip(self, wb_unit, call_traces):
        longest = max(call_traces, key=len)
        assert load_trace(dump_trace(longest), wb_unit).key == longest.key

    def test_empty_trace(self):
        assert dump_trace(load_trace("")) == ""

    def test_bad_line(self, wb_unit):
        with pytest.raises(ValueError, match="expected 3"):
            load_trace("p<c>\tp^o\n", wb_unit)
