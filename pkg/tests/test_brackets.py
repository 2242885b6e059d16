"""Tests for stacks, the well-bracketed type system and discreet processes."""

import itertools

import pytest

from calculus.lts import step
from calculus.parser import parse_stack
from calculus.syntax import NIL, Name, NameKind, congruent
from discipline.brackets import (
    DecompositionError,
    StackEntry,
    Tag,
    WbConfig,
    build_forwarder_context,
    enumerate_stacks,
    erase,
    evolve_stack,
    interleave,
    is_clean,
    is_discreet,
    is_typed,
    make_discreet,
    stack_wellformed,
    typecheck_wb,
    wb_allowed,
)

P = Name("p", NameKind.CONT)
Q = Name("q", NameKind.CONT)


def o(n: Name) -> StackEntry:
    return StackEntry(n, Tag.O)


def i(n: Name) -> StackEntry:
    return StackEntry(n, Tag.I)


@pytest.fixture
def wb_unit(corpus_unit):
    return corpus_unit("typings_wb.pi")


class TestStacks:
    @pytest.mark.parametrize(
        "stack, expected",
        [
            ((), True),
            ((o(P),), True),
            ((i(P),), False),
            ((o(P), o(Q)), False),
            ((o(Q), i(Q), o(P)), True),
            ((i(Q), o(Q)), False),
            ((o(P), i(Q), o(P)), False),
        ],
    )
    def test_wellformed(self, stack, expected):
        assert stack_wellformed(stack) is expected

    def test_erase(self, wb_unit):
        assert erase(wb_unit.stacks["Top"]) == 1
        assert erase(wb_unit.stacks["PFirst"]) == 0
        assert erase(()) == 0

    def test_clean(self, wb_unit):
        assert is_clean(wb_unit.stacks["Top"])
        assert not is_clean(wb_unit.stacks["Open"])

    def test_interleave(self, wb_unit):
        p_part, q_part = wb_unit.stacks["PFirst"][:2], wb_unit.stacks["PFirst"][2:]
        assert interleave(p_part, q_part) == {wb_unit.stacks["PFirst"], wb_unit.stacks["QFirst"]}

    def test_interleave_with_empty(self):
        assert interleave((), (o(P),)) == {(o(P),)}

    def test_interleave_matches_brute_force(self):
        names = [Name(c, NameKind.CONT) for c in "pqr"]
        entries = [StackEntry(n, t) for n in names for t in Tag]
        stacks = [s for k in range(4) for s in itertools.product(entries, repeat=k) if stack_wellformed(s)]
        for left in stacks:
            for right in stacks:
                total = len(left) + len(right)
                shuffles = set()
                for positions in itertools.combinations(range(total), len(left)):
                    ls, rs = iter(left), iter(right)
                    shuffles.add(tuple(next(ls) if k in positions else next(rs) for k in range(total)))
                assert interleave(left, right) == {s for s in shuffles if stack_wellformed(s)}


class TestTypecheck:
    @pytest.mark.parametrize(
        "proc, stack",
        [
            ("Answer", "Top"),
            ("Relay", "Top"),
            ("Call", "Top"),
            ("OpenCall", "Open"),
            ("P0", "PFirst"),
            ("P0", "QFirst"),
        ],
    )
    def test_corpus_typings(self, wb_unit, proc, stack):
        assert typecheck_wb(wb_unit.process(proc), wb_unit.stacks[stack])

    def test_answer_needs_its_continuation(self, wb_unit):
        result = typecheck_wb(wb_unit.process("Answer"), ())
        assert not result
        assert result.failure.rule == "Out-answer"

    def test_ill_formed_stack(self, wb_unit):
        result = typecheck_wb(wb_unit.process("Answer"), (i(P),))
        assert result.failure.rule == "Stack"

    def test_nil(self):
        assert is_typed(NIL, ())
        assert not is_typed(NIL, (o(P),))

    def test_deadlock_has_no_stack(self, wb_unit):
        assert enumerate_stacks(wb_unit.process("Deadlock")) == []

    def test_enumerate_finds_both_orders(self, wb_unit):
        stacks = enumerate_stacks(wb_unit.process("P0"))
        assert wb_unit.stacks["PFirst"] in stacks
        assert wb_unit.stacks["QFirst"] in stacks

    def test_plain_input_under_empty_stack(self, pi):
        assert typecheck_wb(pi("u().0"), ()).failure.rule == "Inp-plain"


class TestDiscreet:
    def test_private_call(self, wb_unit):
        assert is_discreet(wb_unit.process("Call"))
        assert not is_discreet(wb_unit.process("OpenCall"))

    def test_forwarder_makes_a_call_discreet(self, corpus_unit):
        unit = corpus_unit("forwarder.pi")
        made = make_discreet(unit.process("Global"))
        assert is_discreet(made)
        assert congruent(made, unit.process("Local"))

    def test_discreet_process_unchanged(self, wb_unit):
        call = wb_unit.process("Call")
        assert make_discreet(call) == call


class TestTypedTransitions:
    def test_only_top_of_stack_answers(self, wb_unit):
        config = WbConfig(wb_unit.stacks["PFirst"], wb_unit.process("P0"))
        by_subject = {t.action.subject.id: t for t in step(config.proc)}
        assert wb_allowed(config, by_subject["p"])
        assert not wb_allowed(config, by_subject["q"])

    def test_answer_pops(self, wb_unit):
        config = WbConfig(wb_unit.stacks["Top"], wb_unit.process("Answer"))
        (t,) = step(config.proc)
        assert evolve_stack(config, t).stack == ()

    def test_question_pushes_its_continuation(self, wb_unit):
        config = WbConfig(wb_unit.stacks["Top"], wb_unit.process("Call"))
        (t,) = [t for t in step(config.proc) if t.action.is_output]
        assert wb_allowed(config, t)
        after = evolve_stack(config, t)
        assert [e.tag for e in after.stack] == [Tag.I, Tag.O]
        assert after.stack[0].name in t.action.extruded
        assert is_typed(after.proc, after.stack)

    def test_buried_continuation_is_not_observable(self, pi, decls):
        stack = parse_stack("p^o, p^i, r^o", decls)
        config = WbConfig(stack, pi("p<> | p().r<>"))
        assert is_typed(config.proc, stack)
        outputs = [t for t in step(config.proc) if t.action.is_output]
        assert [t.action.subject.id for t in outputs] == ["p"]
        verdict = wb_allowed(config, outputs[0])
        assert not verdict
        assert "pending below" in verdict.reason


class TestForwarderContext:
    def test_empty_stack(self):
        ctx, stack = build_forwarder_context((), [], Q)
        assert ctx.restrictions == ()
        assert stack == ()

    def test_single_answer(self):
        x1 = Name("x1", NameKind.OUT)
        fq = Name("fq", NameKind.CONT)
        ctx, stack = build_forwarder_context((o(P),), [x1], fq)
        assert [n.id for n in ctx.restrictions] == ["p"]
        assert stack == (o(fq),)
        assert typecheck_wb(ctx.frame, (i(P), o(fq)))

    def test_keeps_a_pending_input(self, wb_unit):
        fq = Name("fq", NameKind.CONT)
        xs = [Name("x1", NameKind.OUT), Name("x2", NameKind.OUT)]
        ctx, stack = build_forwarder_context(wb_unit.stacks["PFirst"], xs, fq)
        assert [n.id for n in ctx.restrictions] == ["p'", "q'", "q"]
        assert [str(e) for e in stack] == ["p^i", "fq^o"]

    def test_even_stack(self):
        with pytest.raises(DecompositionError, match="does not end"):
            build_forwarder_context((o(P), i(Q)), [Name("x1", NameKind.OUT)], Name("fq", NameKind.CONT))

    def test_not_enough_call_names(self, wb_unit):
        with pytest.raises(DecompositionError, match="need 2 fresh call names"):
            build_forwarder_context(wb_unit.stacks["PFirst"], [Name("x1", NameKind.OUT)], Name("fq", NameKind.CONT))
