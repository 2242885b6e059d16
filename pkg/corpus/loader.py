"""
Corpus of worked examples: typing judgments, equivalence laws and relation
certificates, each with the verdicts it is expected to produce.

Entries live in ``data/corpus/corpus.json`` and point at ``.pi`` source units
in the same directory; units are parsed once and shared between entries.
"""

from __future__ import annotations

import json
import logging
from functools import lru_cache
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, Field

from calculus.lts import StepContext
from calculus.parser import SourceUnit, parse, parse_stack
from calculus.syntax import CalculusError, Process
from discipline.brackets import Stack
from equiv.verdict import Outcome, Verdict

logger = logging.getLogger(__name__)

CORPUS_DIR = Path(__file__).resolve().parent.parent / "data" / "corpus"

Expectation = Literal["yes", "no", "pass", "bounded", "fail"]


class UnknownEntry(CalculusError):
    def __init__(self, entry_id: str):
        self.entry_id = entry_id
        super().__init__(f"no corpus entry '{entry_id}'")


class TypingExpectation(BaseModel):
    proc: str
    discipline: Literal["seq", "wb"]
    eta: int | None = None
    stack: str | None = None
    typable: bool = True


class QueryExpectation(BaseModel):
    mode: str
    lhs: str
    rhs: str
    eta: int | None = None
    refs: str | None = None
    stack: str | None = None
    expect: Expectation


class CertificateExpectation(BaseModel):
    relation: str
    mode: str | None = None
    expect: Expectation
    failure_action: str | None = None


class CorpusEntry(BaseModel):
    id: str
    claim: str
    file: str
    typings: list[TypingExpectation] = Field(default_factory=list)
    queries: list[QueryExpectation] = Field(default_factory=list)
    certificates: list[CertificateExpectation] = Field(default_factory=list)
    budget: int | None = None
    slow: bool = False

    @property
    def path(self) -> Path:
        return CORPUS_DIR / self.file

    def unit(self) -> SourceUnit:
        return _load_unit(str(self.path))

    def process(self, name: str) -> Process:
        return self.unit().process(name)

    def stack(self, text: str | None) -> Stack:
        return parse_stack(text, self.unit()) if text else ()

    def step_context(self) -> StepContext:
        return StepContext(domain=self.unit().domain)

    def query_typing(self, q: QueryExpectation):
        """Typing argument for ``equiv.check``: the indicator or the stack."""
        if q.mode in ("wb", "wb-upto", "barbed-wb", "barbed-wb-raw"):
            return self.stack(q.stack)
        return q.eta


@lru_cache(maxsize=None)
def _load_unit(path: str) -> SourceUnit:
    logger.debug("parsing corpus unit %s", path)
    return parse(Path(path).read_text(encoding="utf-8"))


def load_corpus(ids: list[str] | None = None, root: Path | None = None) -> list[CorpusEntry]:
    """Corpus entries in file order, restricted to ``ids`` when given."""
    manifest = (root or CORPUS_DIR) / "corpus.json"
    entries = [CorpusEntry.model_validate(raw) for raw in json.loads(manifest.read_text(encoding="utf-8"))]
    if ids is None:
        return entries
    by_id = {e.id: e for e in entries}
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise UnknownEntry(missing[0])
    return [by_id[i] for i in ids]


def expectation_met(expect: Expectation, verdict: Verdict) -> bool:
    """``pass`` is a yes with no failure, ``bounded`` a truncated check with no failure
    and ``fail`` anything short of yes."""
    if expect == "yes":
        return verdict.outcome is Outcome.YES
    if expect == "no":
        return verdict.outcome is Outcome.NO
    if expect == "pass":
        return verdict.outcome is Outcome.YES and not verdict.failures
    if expect == "bounded":
        return verdict.outcome is Outcome.BOUNDED and not verdict.failures
    return verdict.outcome is not Outcome.YES
