"""Questions, answers and the well-bracketing check on traces."""

from __future__ import annotations

from pydantic import BaseModel

from calculus.lts import Action
from calculus.syntax import CalculusError, Name, NameKind
from traces.trace import StepKind, Trace, same_stack


class StackDeltaMismatch(CalculusError):
    def __init__(self, index: int, kind: StepKind, delta: int):
        self.index = index
        super().__init__(f"step {index} is a {kind.value} but changes the stack by {delta}")


class UniquenessViolation(CalculusError):
    pass


class QAMatch(BaseModel):
    pairs: list[tuple[int, int]]


def question_continuation(action: Action) -> Name | None:
    """The continuation a question opens, if ``action`` is a question."""
    if action.is_tau or action.subject.kind is not NameKind.OUT:
        return None
    conts = [o for o in action.objects if isinstance(o, Name) and o.kind is NameKind.CONT]
    return conts[-1] if conts else None


def kind_of(action: Action) -> StepKind:
    if action.is_tau:
        return StepKind.INTERNAL
    if action.subject.kind is NameKind.CONT:
        return StepKind.ANSWER
    if question_continuation(action) is not None:
        return StepKind.QUESTION
    return StepKind.INTERNAL


_DELTAS = {StepKind.QUESTION: {1}, StepKind.ANSWER: {-1}, StepKind.INTERNAL: {0}}


def classify(trace: Trace) -> list[StepKind]:
    """Kind of every step, checking the stack grows by one per question and shrinks by one per answer."""
    kinds: list[StepKind] = []
    for i, step in enumerate(trace.steps):
        kind = kind_of(step.action)
        delta = len(step.after) - len(step.before)
        allowed = _DELTAS[kind] | ({-2} if step.action.is_tau else set())
        if delta not in allowed:
            raise StackDeltaMismatch(i, kind, delta)
        kinds.append(kind)
    return kinds


def match_qa(trace: Trace) -> QAMatch:
    opened: dict[str, list[int]] = {}
    pairs: list[tuple[int, int]] = []
    answered: set[int] = set()
    for j, action in enumerate(trace.actions):
        cont = question_continuation(action)
        if cont is not None:
            opened.setdefault(cont.id, []).append(j)
        elif kind_of(action) is StepKind.ANSWER:
            candidates = opened.get(action.subject.id, [])
            if len(candidates) > 1:
                raise UniquenessViolation(f"answer {j} matches questions {candidates}")
            if candidates:
                i = candidates[0]
                if i in answered:
                    raise UniquenessViolation(f"question {i} is answered twice")
                answered.add(i)
                pairs.append((i, j))
    return QAMatch(pairs=pairs)


def check_wellbracketed(trace: Trace) -> bool:
    """Answers close the innermost open question, as in a factor of a Dyck word."""
    open_questions: list[str] = []
    for action in trace.actions:
        cont = question_continuation(action)
        if cont is not None:
            open_questions.append(cont.id)
        elif kind_of(action) is StepKind.ANSWER and open_questions:
            if open_questions[-1] != action.subject.id:
                return False
            open_questions.pop()
    return True


def matched_segments(trace: Trace) -> list[tuple[int, int]]:
    """Segments ``(i, j)`` that start and end at the same stack and stay strictly above it in between."""
    out: list[tuple[int, int]] = []
    steps = trace.steps
    for i, first in enumerate(steps):
        base = len(first.before)
        for j in range(i + 1, len(steps)):
            if len(steps[j - 1].after) <= base:
                break
            if same_stack(steps[j].after, first.before):
                out.append((i, j))
                break
    return out


def segments_are_matched(trace: Trace) -> bool:
    pairs = set(match_qa(trace).pairs)
    return all(seg in pairs for seg in matched_segments(trace))
