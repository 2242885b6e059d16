"""Tests for the random process generator."""

import json

import pytest

from calculus.parser import parse, render, render_stack
from calculus.syntax import congruent
from discipline.brackets import is_typed
from discipline.sequential import typecheck_seq
from scripts.generate_processes import ProcessGenerator, generate, save, to_source


class TestGenerator:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_seq_family_is_typed(self, seed):
        for meta, p, stack in generate(15, "seq", max_size=7, seed=seed):
            assert stack == ()
            assert typecheck_seq(p) == meta.eta, render(p)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_wb_family_is_typed(self, seed):
        for meta, p, stack in generate(15, "wb", max_size=7, seed=seed):
            assert is_typed(p, stack), f"{render_stack(stack)} |- {render(p)}"
            assert meta.stack == render_stack(stack)

    def test_both_alternates(self):
        families = [meta.family for meta, _, _ in generate(4, "both")]
        assert families == ["seq", "wb", "seq", "wb"]

    def test_deterministic(self):
        a = [render(ProcessGenerator(5, 6).seq(1)) for _ in range(3)]
        b = [render(ProcessGenerator(5, 6).seq(1)) for _ in range(3)]
        assert a == b


class TestFiles:
    def test_source_parses_back(self):
        for meta, p, stack in generate(10, "both", max_size=6, seed=9):
            unit = parse(to_source(meta.name, p, stack))
            assert congruent(unit.process(meta.name), p)
            if stack:
                assert render_stack(unit.stacks["S"]) == render_stack(stack)

    def test_save_writes_manifest(self, tmp_path):
        items = generate(3, "both", seed=2)
        manifest_path = save(items, tmp_path / "out")
        manifest = json.loads(manifest_path.read_text())
        assert [m["name"] for m in manifest] == ["G0", "G1", "G2"]
        assert all((tmp_path / "out" / f"g{i}.pi").exists() for i in range(3))
