from corpus.loader import (
    CORPUS_DIR,
    CertificateExpectation,
    CorpusEntry,
    QueryExpectation,
    TypingExpectation,
    UnknownEntry,
    expectation_met,
    load_corpus,
)

__all__ = [
    "CORPUS_DIR",
    "CertificateExpectation",
    "CorpusEntry",
    "QueryExpectation",
    "TypingExpectation",
    "UnknownEntry",
    "expectation_met",
    "load_corpus",
]
