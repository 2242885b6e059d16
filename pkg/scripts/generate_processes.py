"""
Random well-typed process generator.

Builds processes that are typable by construction, in two families:
- seq : sequential processes with a chosen thread indicator (0 or 1)
- wb  : well-bracketed processes under the empty stack or under ``p^o``

Used by the property sweeps in ``experiments`` and, from the command line,
to write ``.pi`` files plus a JSON manifest for manual exploration.

Usage:
    python -m scripts.generate_processes --count 20 --output data/generated/
    python -m scripts.generate_processes --family wb --max-size 8 --seed 7
"""

from __future__ import annotations

import argparse
import logging
import random
from collections import defaultdict
from pathlib import Path

from pydantic import BaseModel

from calculus.parser import render, render_stack
from calculus.syntax import (
    NIL,
    Input,
    Match,
    Name,
    NameKind,
    Output,
    Process,
    ReplInput,
    Res,
    Sum,
    Tau,
    all_names,
    is_guard,
    literal,
    par,
    size,
)
from discipline.brackets import Stack, StackEntry, Tag

logger = logging.getLogger(__name__)

# ── Vocabulary ────────────────────────────────────────────────────────────────

OUTS = tuple(Name(i, NameKind.OUT, ()) for i in ("x", "y", "z"))
INS = tuple(Name(i, NameKind.IN, ()) for i in ("u", "v"))
CALLS = tuple(Name(i, NameKind.OUT, (NameKind.CONT,)) for i in ("f", "g"))
ANSWER = Name("p", NameKind.CONT, ())

FAMILIES = ("seq", "wb")


class GeneratedProcess(BaseModel):
    name: str
    family: str
    eta: int | None = None
    stack: str = ""
    size: int
    file_path: str = ""


# ── Generator ─────────────────────────────────────────────────────────────────


class ProcessGenerator:
    """Seeded generator; ``max_size`` bounds the number of syntax nodes."""

    def __init__(self, seed: int = 0, max_size: int = 8):
        self.rng = random.Random(seed)
        self.max_size = max_size
        self._counter = 0

    def _fresh_cont(self, prefix: str) -> Name:
        self._counter += 1
        return Name(f"{prefix}{self._counter}", NameKind.CONT, ())

    def _split(self, n: int) -> tuple[int, int]:
        k = self.rng.randint(1, n - 1)
        return k, n - k

    # sequential family

    def seq(self, eta: int, budget: int | None = None) -> Process:
        """A process whose thread indicator is ``eta``."""
        n = self.max_size if budget is None else budget
        rng = self.rng
        if n <= 1:
            if eta:
                return Output(rng.choice(OUTS))
            return rng.choice([NIL, Output(rng.choice(INS))])
        if eta:
            shape = rng.choice(["in", "in", "par", "tau", "sum", "res"] if n >= 3 else ["in", "tau", "res"])
            if shape == "in":
                return Input(rng.choice(INS), (), self.seq(1, n - 1))
            if shape == "tau":
                return Tau(self.seq(1, n - 1))
            if shape == "res":
                return Res(rng.choice(OUTS), self.seq(1, n - 1))
            k, rest = self._split(n - 1)
            if shape == "sum":
                a, b = rng.sample(INS, 2)
                return Sum((Input(a, (), self.seq(1, k)), Input(b, (), self.seq(1, rest))))
            return par(self.seq(1, k), self.seq(0, rest))
        shape = rng.choice(["call", "serve", "par", "tau", "match", "res"] if n >= 3 else ["call", "serve", "tau"])
        if shape == "call":
            return Input(rng.choice(OUTS), (), self.seq(1, n - 1))
        if shape == "serve":
            return ReplInput(rng.choice(OUTS), (), self.seq(1, n - 1))
        if shape == "tau":
            return Tau(self.seq(0, n - 1))
        if shape == "match":
            body = self.seq(0, n - 1)
            return Match(literal(0), literal(0), body if is_guard(body) else Tau(body))
        if shape == "res":
            return Res(rng.choice(OUTS), self.seq(0, n - 1))
        k, rest = self._split(n - 1)
        return par(self.seq(0, k), self.seq(0, rest))

    # well-bracketed family

    def answering(self, cont: Name = ANSWER, budget: int | None = None) -> Process:
        """A process typed under the stack ``cont^o``."""
        n = self.max_size if budget is None else budget
        rng = self.rng
        if n <= 1:
            return rng.choice([Output(cont), Output(rng.choice(CALLS), (cont,))])
        shape = rng.choice(["call", "relay", "tau", "nest", "nest", "side"] if n >= 3 else ["call", "relay", "tau"])
        if shape == "call":
            return Output(rng.choice(CALLS), (cont,))
        if shape == "relay":
            return Input(rng.choice(INS), (), self.answering(cont, n - 1))
        if shape == "tau":
            return Tau(self.answering(cont, n - 1))
        if shape == "nest":
            q = self._fresh_cont("q")
            waiting = Input(q, (), self.answering(cont, n - 2))
            return Res(q, par(Output(rng.choice(CALLS), (q,)), waiting))
        k, rest = self._split(n - 1)
        return par(self.answering(cont, k), self.idle(rest))

    def idle(self, budget: int | None = None) -> Process:
        """A process typed under the empty stack."""
        n = self.max_size if budget is None else budget
        rng = self.rng
        if n <= 1:
            return rng.choice([NIL, Output(rng.choice(INS))])
        shape = rng.choice(["serve", "serve", "once", "par", "tau"] if n >= 3 else ["serve", "once", "tau"])
        if shape in ("serve", "once"):
            b = self._fresh_cont("p")
            node = ReplInput if shape == "serve" else Input
            return node(rng.choice(CALLS), (b,), self.answering(b, n - 1))
        if shape == "tau":
            return Tau(self.idle(n - 1))
        k, rest = self._split(n - 1)
        return par(self.idle(k), self.idle(rest))

    def wb(self, open_stack: bool | None = None) -> tuple[Process, Stack]:
        if open_stack is None:
            open_stack = self.rng.random() < 0.5
        if open_stack:
            return self.answering(), (StackEntry(ANSWER, Tag.O),)
        return self.idle(), ()


Generated = tuple[GeneratedProcess, Process, Stack]


def generate(count: int, family: str = "seq", max_size: int = 8, seed: int = 0) -> list[Generated]:
    """``count`` processes of ``family``; ``both`` alternates the two families."""
    gen = ProcessGenerator(seed, max_size)
    out: list[Generated] = []
    for i in range(count):
        fam = FAMILIES[i % 2] if family == "both" else family
        if fam == "seq":
            eta = gen.rng.randint(0, 1)
            p, stack = gen.seq(eta), ()
            meta = GeneratedProcess(name=f"G{i}", family=fam, eta=eta, size=size(p))
        else:
            p, stack = gen.wb()
            meta = GeneratedProcess(name=f"G{i}", family=fam, stack=render_stack(stack), size=size(p))
        out.append((meta, p, stack))
    return out


# ── Files ─────────────────────────────────────────────────────────────────────


def to_source(name: str, p: Process, stack: Stack = ()) -> str:
    """A ``.pi`` source declaring every name of ``p`` and defining it as ``name``."""
    by_kind: dict[NameKind, set[str]] = defaultdict(set)
    for n in all_names(p) | {e.name for e in stack}:
        if not n.is_literal:
            by_kind[n.kind].add(n.id)
    lines = [f"decl {kind.value} {', '.join(sorted(ids))}" for kind, ids in sorted(by_kind.items())]
    if any(n.is_literal for n in all_names(p)):
        lines.append("decl val 0..1")
    lines += ["", f"proc {name} = {render(p)}"]
    if stack:
        lines.append(f"stack S = {render_stack(stack)}")
    return "\n".join(lines) + "\n"


def save(items: list[Generated], output_dir: Path) -> Path:
    output_dir.mkdir(parents=True, exist_ok=True)
    manifest: list[GeneratedProcess] = []
    for meta, p, stack in items:
        file_path = output_dir / f"{meta.name.lower()}.pi"
        file_path.write_text(to_source(meta.name, p, stack), encoding="utf-8")
        manifest.append(meta.model_copy(update={"file_path": str(file_path)}))
    manifest_path = output_dir / "manifest.json"
    manifest_path.write_text(
        "[\n" + ",\n".join(m.model_dump_json(indent=2) for m in manifest) + "\n]\n",
        encoding="utf-8",
    )
    return manifest_path


def main():
    parser = argparse.ArgumentParser(description="Generate random well-typed processes")
    parser.add_argument("--count", type=int, default=10, help="Number of processes to generate")
    parser.add_argument("--family", choices=[*FAMILIES, "both"], default="both")
    parser.add_argument("--max-size", type=int, default=8, help="Syntax nodes per process")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--output",
        type=str,
        default="data/generated/",
        help="Output directory for .pi files and the manifest",
    )
    args = parser.parse_args()

    logging.basicConfig(level="INFO", format="%(levelname)s | %(message)s")

    items = generate(args.count, args.family, args.max_size, args.seed)
    manifest_path = save(items, Path(args.output))
    logger.info("Wrote %d processes, manifest at %s", len(items), manifest_path)


if __name__ == "__main__":
    main()
