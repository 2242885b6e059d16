"""Tests for relation certificates."""

import asyncio

from calculus.lts import StepContext
from calculus.parser import parse
from equiv.certificate import acheck_certificate, check_certificate
from equiv.verdict import Outcome

BAD = """
decl out x
proc A = x<>
relation Bad mode="seq" {
    triple eta=1; lhs = A; rhs = 0;
}
"""


class TestCheckCertificate:
    def test_expansion_relation(self, corpus_unit):
        cert = corpus_unit("expansion.pi").relations["Expand1"]
        verdict = check_certificate(cert)
        assert verdict.outcome is Outcome.YES
        assert verdict.relation_size == 1
        assert verdict.failures == []

    def test_mode_override(self, corpus_unit):
        cert = corpus_unit("expansion.pi").relations["Expand1"]
        verdict = check_certificate(cert, mode="ordinary")
        assert verdict.outcome is Outcome.NO
        assert verdict.failures
        assert verdict.failures[0].triple == 0

    def test_swap_relation(self, corpus_unit):
        unit = corpus_unit("swap_faa.pi")
        verdict = check_certificate(unit.relations["SwapRel"], ctx=StepContext(domain=unit.domain))
        assert verdict.outcome is Outcome.YES
        assert verdict.relation_size == 4

    def test_ill_typed_triple(self):
        cert = parse(BAD).relations["Bad"]
        verdict = check_certificate(cert)
        assert verdict.outcome is Outcome.NO
        (failure,) = verdict.failures
        assert failure.action == "typing"
        assert "eta=1" in failure.reason


class TestConcurrent:
    def test_matches_sequential_check(self, corpus_unit):
        cert = corpus_unit("expansion.pi").relations["Expand2"]
        verdict = asyncio.run(acheck_certificate(cert))
        assert verdict.outcome is check_certificate(cert).outcome is Outcome.YES

    def test_reports_failures(self, corpus_unit):
        cert = corpus_unit("expansion.pi").relations["Expand2"]
        verdict = asyncio.run(acheck_certificate(cert, mode="ordinary"))
        assert verdict.outcome is Outcome.NO

    def test_truncated_check_is_bounded(self, corpus_unit):
        cert = corpus_unit("expansion.pi").relations["Expand2"]
        verdict = asyncio.run(acheck_certificate(cert, max_pairs=0))
        assert verdict.outcome is check_certificate(cert, max_pairs=0).outcome is Outcome.BOUNDED
        assert verdict.failures == []
