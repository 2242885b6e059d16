"""Shared fixtures for piwb tests."""

import os
from pathlib import Path

import pytest

from calculus.parser import SourceUnit, parse, parse_process
from calculus.syntax import Process
from corpus.loader import CORPUS_DIR

DECLS = """
decl out x, y, z, f
decl in u, v, a, b, c
decl cont p, q, r, p'
decl ref l
decl val m, n
decl val 0..2
"""


def _run_slow() -> bool:
    return os.environ.get("PIWB_RUN_SLOW", "") not in ("", "0", "false")


def pytest_collection_modifyitems(config, items):
    """Auto-skip tests marked ``slow`` unless PIWB_RUN_SLOW is set."""
    if _run_slow():
        return
    skip_marker = pytest.mark.skip(reason="slow test; set PIWB_RUN_SLOW=1 to run it")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_marker)


@pytest.fixture
def decls() -> SourceUnit:
    """Declarations shared by the inline processes of the tests."""
    return parse(DECLS)


@pytest.fixture
def pi(decls):
    """Parse a process against the shared declarations."""

    def _parse(text: str) -> Process:
        return parse_process(text, decls)

    return _parse


@pytest.fixture
def corpus_unit():
    """Load one of the corpus source files by name."""

    def _load(name: str) -> SourceUnit:
        return parse((CORPUS_DIR / name).read_text(encoding="utf-8"))

    return _load


@pytest.fixture
def corpus_dir() -> Path:
    return CORPUS_DIR


@pytest.fixture
def results_dir(tmp_path, monkeypatch):
    """Redirect persisted reports into a temporary directory."""
    from cli.settings import settings

    target = tmp_path / "results"
    monkeypatch.setattr(settings, "results_dir", str(target))
    return target
