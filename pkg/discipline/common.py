"""Verdict records shared by the type disciplines."""

from __future__ import annotations

from dataclasses import dataclass

from pydantic import BaseModel


@dataclass(frozen=True)
class Allowed:
    """Boolean verdict that remembers why a transition was accepted or refused."""

    ok: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


ALLOWED = Allowed(True)


def refused(reason: str) -> Allowed:
    return Allowed(False, reason)


class TypingFailure(BaseModel):
    rule: str
    subterm: str
    reason: str

    def __str__(self) -> str:
        return f"{self.rule}: {self.reason} in {self.subterm}"
