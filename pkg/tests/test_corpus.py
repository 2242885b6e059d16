"""Tests for the corpus loader and the acceptance runner."""

import json
from dataclasses import replace

import pytest

from calculus.syntax import CalculusError
from corpus.loader import UnknownEntry, expectation_met, load_corpus
from equiv.dispatch import check
from equiv.verdict import ChallengeFailure, Outcome, Verdict
from evals.runner import check_entry, run_corpus


def _verdict(outcome: Outcome, failures: int = 0) -> Verdict:
    failure = ChallengeFailure(lhs="a", rhs="b", typing="", side="left", action="x<>")
    return Verdict(mode="seq", outcome=outcome, failures=[failure] * failures)


class TestLoader:
    def test_entries_are_unique(self):
        ids = [e.id for e in load_corpus()]
        assert len(ids) == len(set(ids))

    def test_every_reference_resolves(self):
        for entry in load_corpus():
            assert entry.path.exists(), entry.id
            unit = entry.unit()
            for t in entry.typings:
                unit.process(t.proc)
                entry.stack(t.stack)
            for q in entry.queries:
                unit.process(q.lhs)
                unit.process(q.rhs)
                entry.query_typing(q)
            for c in entry.certificates:
                assert c.relation in unit.relations, f"{entry.id}: {c.relation}"

    def test_select_by_id(self):
        (entry,) = load_corpus(["thread"])
        assert entry.file == "thread.pi"

    def test_unknown_id(self):
        with pytest.raises(UnknownEntry, match="no corpus entry 'nope'"):
            load_corpus(["thread", "nope"])

    def test_custom_root(self, tmp_path):
        (tmp_path / "corpus.json").write_text(json.dumps([{"id": "a", "claim": "c", "file": "a.pi"}]))
        (entry,) = load_corpus(root=tmp_path)
        assert entry.queries == []

    @pytest.mark.parametrize(
        "expect, outcome, failures, met",
        [
            ("yes", Outcome.YES, 0, True),
            ("yes", Outcome.BOUNDED, 0, False),
            ("no", Outcome.NO, 1, True),
            ("pass", Outcome.YES, 0, True),
            ("pass", Outcome.BOUNDED, 0, False),
            ("pass", Outcome.YES, 1, False),
            ("bounded", Outcome.BOUNDED, 0, True),
            ("bounded", Outcome.BOUNDED, 1, False),
            ("bounded", Outcome.YES, 0, False),
            ("fail", Outcome.BOUNDED, 1, True),
            ("fail", Outcome.YES, 0, False),
        ],
    )
    def test_expectation_met(self, expect, outcome, failures, met):
        assert expectation_met(expect, _verdict(outcome, failures)) is met


class TestRunner:
    def test_typing_entry(self):
        (entry,) = load_corpus(["thread"])
        results = check_entry(entry)
        assert [r.kind for r in results] == ["typing"] * 4
        assert all(r.passed for r in results)

    def test_query_entry_with_spotcheck(self):
        (entry,) = load_corpus(["expansion-1"])
        results = check_entry(entry, spotcheck=True)
        kinds = [r.kind for r in results]
        assert kinds.count("query") == 2
        assert "spotcheck" in kinds
        assert "certificate" in kinds
        assert all(r.passed for r in results), [r for r in results if not r.passed]

    def test_untypable_wb_entry(self):
        (entry,) = load_corpus(["wb-untypable"])
        (result,) = check_entry(entry)
        assert result.passed
        assert result.actual == "0 stacks"

    def test_report_persisted(self, results_dir):
        report = run_corpus(["forwarder-law"], spotcheck=False)
        assert report.ok
        assert report.n_entries == 1
        (path,) = results_dir.glob("corpus_*.json")
        assert json.loads(path.read_text())["passed"] == report.passed

    def test_skip_slow(self):
        report = run_corpus(include_slow=False, spotcheck=False, persist=False)
        assert "awkward" not in {r.entry for r in report.results}

    @pytest.mark.slow
    def test_whole_corpus(self, results_dir):
        report = run_corpus()
        failed = [f"{r.entry}: {r.label} expected {r.expected}, got {r.actual}" for r in report.results if not r.passed]
        assert report.ok, failed

    @pytest.mark.slow
    def test_doubling_fresh_instantiations_keeps_verdicts(self):
        for entry in load_corpus():
            if entry.slow:
                continue
            budget = entry.budget if entry.budget is not None else 2
            base = entry.step_context()
            for q in entry.queries:
                lhs, rhs, typing = entry.process(q.lhs), entry.process(q.rhs), entry.query_typing(q)
                once = check(q.mode, lhs, rhs, typing, budget=budget, ctx=base)
                twice = check(q.mode, lhs, rhs, typing, budget=budget, ctx=replace(base, fresh_per_position=2))
                if Outcome.BOUNDED not in (once.outcome, twice.outcome):
                    assert once.outcome is twice.outcome, f"{entry.id}: {q.mode} {q.lhs} ~ {q.rhs}"


def test_unknown_entry_is_a_calculus_error():
    assert issubclass(UnknownEntry, CalculusError)
