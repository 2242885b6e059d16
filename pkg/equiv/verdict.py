"""Verdict records returned by every decider and certificate check."""

from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, Field


class Outcome(str, Enum):
    YES = "yes"
    NO = "no"
    BOUNDED = "bounded"


class WitnessStep(BaseModel):
    """One round of the game: the challenger moves, the defender answers (or cannot)."""

    side: str  # "left" | "right"
    action: str
    challenger: str
    defender: str | None = None
    typing: str = ""


class ChallengeFailure(BaseModel):
    """An allowed challenge from a related pair none of whose answers stays related."""

    lhs: str
    rhs: str
    typing: str
    side: str
    action: str
    reason: str = "no answer lands back in the relation"
    triple: int | None = None


class Stats(BaseModel):
    pairs: int = 0
    alive: int = 0
    states: int = 0
    truncated: bool = False
    latency_ms: float = 0.0


class Verdict(BaseModel):
    mode: str
    outcome: Outcome
    witness: list[WitnessStep] = Field(default_factory=list)
    failures: list[ChallengeFailure] = Field(default_factory=list)
    relation_size: int = 0
    stats: Stats = Field(default_factory=Stats)
    note: str = ""

    @property
    def equivalent(self) -> bool:
        return self.outcome is Outcome.YES

    def records(self) -> list[tuple[str, str]]:
        """Key/value lines of the structured report, ``VERDICT`` last."""
        out = [
            ("mode", self.mode),
            ("result", self.outcome.value),
            ("relation_size", str(self.relation_size)),
            ("pairs", str(self.stats.pairs)),
            ("states", str(self.stats.states)),
            ("truncated", str(self.stats.truncated).lower()),
        ]
        for i, step in enumerate(self.witness):
            answer = step.defender if step.defender is not None else "-"
            out.append((f"witness.{i}", f"{step.side} {step.action} => {answer}"))
        for i, f in enumerate(self.failures):
            where = f"triple {f.triple} " if f.triple is not None else ""
            out.append((f"failure.{i}", f"{where}{f.side} {f.action}: {f.reason}"))
        if self.note:
            out.append(("note", self.note))
        out.append(("VERDICT", self.outcome.value.upper()))
        return out


def combine(mode: str, verdicts: list[Verdict]) -> Verdict:
    """Conjunction: no beats bounded beats yes."""
    if any(v.outcome is Outcome.NO for v in verdicts):
        outcome = Outcome.NO
    elif any(v.outcome is Outcome.BOUNDED for v in verdicts):
        outcome = Outcome.BOUNDED
    else:
        outcome = Outcome.YES
    first_no = next((v for v in verdicts if v.outcome is Outcome.NO), None)
    return Verdict(
        mode=mode,
        outcome=outcome,
        witness=first_no.witness if first_no else [],
        failures=[f for v in verdicts for f in v.failures],
        relation_size=sum(v.relation_size for v in verdicts),
        stats=Stats(
            pairs=sum(v.stats.pairs for v in verdicts),
            alive=sum(v.stats.alive for v in verdicts),
            states=sum(v.stats.states for v in verdicts),
            truncated=any(v.stats.truncated for v in verdicts),
            latency_ms=round(sum(v.stats.latency_ms for v in verdicts), 1),
        ),
    )
