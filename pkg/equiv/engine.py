"""
On-the-fly greatest fixpoint over pairs of processes.

Pairs are explored from the roots; each pair records its obligations (one
per allowed challenge, listing the pairs the defender's answers lead to).
Removal rounds then discard every pair with an obligation none of whose
candidates is still alive. A removal is sound when the answer closure was
complete and every candidate was itself removed soundly; removals resting
on truncated closures only support a bounded verdict.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from calculus.lts import Transition, deterministic_reductions
from calculus.parser import render
from calculus.syntax import canonical_form, open_top, par, restrict
from equiv.games import Game, Node
from equiv.verdict import ChallengeFailure, Outcome, WitnessStep

logger = logging.getLogger(__name__)

_ALTERNATIVE_LIMIT = 32
_REDUCTION_LIMIT = 4


@dataclass
class Obligation:
    side: int
    transition: Transition
    candidates: list[str]
    complete: bool


@dataclass
class Removal:
    round: int
    sound: bool
    obligation: int | None  # None: inconsistent pair


@dataclass
class EngineResult:
    nodes: dict[str, Node]
    obligations: dict[str, list[Obligation]]
    alive: set[str]
    removed: dict[str, Removal]
    truncated: bool
    open_ended: bool = False
    unexplored: set[str] = field(default_factory=set)

    def outcome(self, key: str) -> Outcome:
        if key in self.alive:
            # missing answers can only remove pairs; missing challenges or pairs can keep them
            return Outcome.BOUNDED if self.open_ended else Outcome.YES
        return Outcome.NO if self.removed[key].sound else Outcome.BOUNDED


class Engine:
    """Explores the pairs reachable from the roots and solves the removal fixpoint.

    ``relation`` switches to closed-world checking: only the listed pairs (and
    identity pairs when ``identity`` is set) count as related, nothing else is
    explored. ``upto`` lets each answer be matched modulo deterministic
    reductions and common static-context components.
    """

    def __init__(
        self,
        game: Game,
        max_pairs: int = 20_000,
        consistent: Callable[[Node], bool] | None = None,
        upto: bool = False,
        relation: set[str] | None = None,
        identity: bool = True,
    ):
        self.game = game
        self.max_pairs = max_pairs
        self.consistent = consistent
        self.upto = upto
        self.relation = relation
        self.identity = identity
        self.nodes: dict[str, Node] = {}
        self.obligations: dict[str, list[Obligation]] = {}
        self.identities: set[str] = set()
        self.inconsistent: set[str] = set()
        self.unexplored: set[str] = set()
        self.truncated = False
        self.missing_challenges = False

    # ── exploration ──────────────────────────────────────────────────────

    def explore(self, roots: list[Node]) -> None:
        queue: deque[Node] = deque()
        for r in roots:
            if r.key not in self.nodes:
                self.nodes[r.key] = r
                queue.append(r)
        while queue:
            node = queue.popleft()
            for nxt in self._expand(node):
                if nxt.key not in self.nodes:
                    self.nodes[nxt.key] = nxt
                    if self.relation is None:
                        queue.append(nxt)
        logger.debug(
            "explored %d pairs (%d identity, %d unexplored)",
            len(self.nodes),
            len(self.identities),
            len(self.unexplored),
        )

    def expand_one(self, node: Node) -> None:
        """Compute the obligations of a single pair (closed-world use)."""
        self.nodes.setdefault(node.key, node)
        for nxt in self._expand(node):
            self.nodes.setdefault(nxt.key, nxt)

    def _expand(self, node: Node) -> list[Node]:
        if node.is_identity and self.identity:
            self.identities.add(node.key)
            return []
        if self.consistent is not None and not self.consistent(node):
            self.inconsistent.add(node.key)
            return []
        if len(self.obligations) >= self.max_pairs:
            self.unexplored.add(node.key)
            self.truncated = True
            return []
        found: list[Node] = []
        obligations: list[Obligation] = []
        for side in (0, 1):
            moves, complete_moves = self.game.challenges(node, side)
            if not complete_moves:
                self.truncated = True
                self.missing_challenges = True
            for t, typing in moves:
                answers, complete = self.game.answers(node, side, t, typing)
                if not complete:
                    self.truncated = True
                keys: list[str] = []
                for a in answers:
                    for alt in self._alternatives(a) if self.upto else [a]:
                        if self.relation is not None and not self._related(alt):
                            continue
                        if alt.key not in keys:
                            keys.append(alt.key)
                            found.append(alt)
                obligations.append(Obligation(side, t, keys, complete))
        self.obligations[node.key] = obligations
        return found

    def _related(self, node: Node) -> bool:
        if node.is_identity and self.identity:
            return True
        return node.key in self.relation

    # ── up-to alternatives ───────────────────────────────────────────────

    def _alternatives(self, node: Node) -> list[Node]:
        game = self.game
        out: dict[str, Node] = {node.key: node}
        lefts = deterministic_reductions(node.left, _REDUCTION_LIMIT)
        rights = deterministic_reductions(node.right, _REDUCTION_LIMIT)
        for i, left in enumerate(lefts):
            for j, right in enumerate(rights):
                typing = node.typing
                if i or j:
                    typing = game.after_tau(typing, left)
                    if typing != game.after_tau(node.typing, right):
                        continue
                base = game.node(typing, left, right) if (i or j) else node
                out.setdefault(base.key, base)
                for hole in self._strip(base):
                    out.setdefault(hole.key, hole)
                if len(out) >= _ALTERNATIVE_LIMIT:
                    return list(out.values())
        return list(out.values())

    def _strip(self, node: Node) -> list[Node]:
        """Pairs left after removing top-level components common to both sides."""
        lb, lc = open_top(canonical_form(node.left))
        rb, rc = open_top(canonical_form(node.right))
        bound = {b.id for b in lb} | {b.id for b in rb}
        right_keys: dict[str, int] = {}
        for c in rc:
            right_keys[c.key] = right_keys.get(c.key, 0) + 1
        common: list = []
        for c in lc:
            if right_keys.get(c.key, 0) and not ({n.id for n in c.fn} & bound):
                right_keys[c.key] -= 1
                common.append(c)
        if not common:
            return []
        options = [common] + ([[c] for c in common] if len(common) > 1 else [])
        out: list[Node] = []
        for frame_parts in options:
            left_rest, right_rest = list(lc), list(rc)
            for c in frame_parts:
                left_rest.remove(c)
                right_rest.remove(c)
            hole_left = canonical_form(restrict(lb, par(*left_rest)))
            hole_right = canonical_form(restrict(rb, par(*right_rest)))
            for typing in self.game.split(node.typing, par(*frame_parts), hole_left, hole_right):
                out.append(self.game.node(typing, hole_left, hole_right))
        return out

    # ── fixpoint ─────────────────────────────────────────────────────────

    def solve(self) -> EngineResult:
        alive = set(self.nodes) - self.inconsistent
        removed: dict[str, Removal] = {k: Removal(0, True, None) for k in self.inconsistent}
        rnd = 1
        while True:
            batch: list[tuple[str, int]] = []
            for key in sorted(self.obligations):
                if key not in alive:
                    continue
                for idx, ob in enumerate(self.obligations[key]):
                    if not any(c in alive for c in ob.candidates):
                        batch.append((key, idx))
                        break
            if not batch:
                break
            for key, idx in batch:
                ob = self.obligations[key][idx]
                sound = ob.complete and all(c in removed and removed[c].sound for c in ob.candidates)
                removed[key] = Removal(rnd, sound, idx)
            for key, _ in batch:
                alive.discard(key)
            rnd += 1
        logger.debug("fixpoint after %d rounds: %d alive, %d removed", rnd - 1, len(alive), len(removed))
        open_ended = self.missing_challenges or bool(self.unexplored)
        return EngineResult(
            self.nodes, self.obligations, alive, removed, self.truncated, open_ended, set(self.unexplored)
        )


# ── Reports ───────────────────────────────────────────────────────────────────


def _side(side: int) -> str:
    return "left" if side == 0 else "right"


def failures_of(result: EngineResult, game: Game, key: str, triple: int | None = None) -> list[ChallengeFailure]:
    """Every obligation of a removed pair whose candidates all died."""
    node = result.nodes[key]
    typing = game.typing_key(node.typing)
    if key in result.removed and result.removed[key].obligation is None:
        return [
            ChallengeFailure(
                lhs=render(node.left),
                rhs=render(node.right),
                typing=typing,
                side="both",
                action="barbs",
                reason="observable barbs differ",
                triple=triple,
            )
        ]
    out: list[ChallengeFailure] = []
    for ob in result.obligations.get(key, []):
        if not any(c in result.alive for c in ob.candidates):
            out.append(
                ChallengeFailure(
                    lhs=render(node.left),
                    rhs=render(node.right),
                    typing=typing,
                    side=_side(ob.side),
                    action=ob.transition.action.key,
                    triple=triple,
                )
            )
    return out


def witness_of(result: EngineResult, game: Game, key: str) -> list[WitnessStep]:
    """Follow the earliest-removed answers down to a challenge that cannot be answered."""
    steps: list[WitnessStep] = []
    seen: set[str] = set()
    while key in result.removed and key not in seen:
        seen.add(key)
        node = result.nodes[key]
        removal = result.removed[key]
        if removal.obligation is None:
            steps.append(WitnessStep(side="both", action="barbs", challenger=render(node.left),
                                     defender=render(node.right), typing=game.typing_key(node.typing)))
            break
        ob = result.obligations[key][removal.obligation]
        step = WitnessStep(
            side=_side(ob.side),
            action=ob.transition.action.key,
            challenger=render(ob.transition.target),
            typing=game.typing_key(node.typing),
        )
        dead = [c for c in ob.candidates if c in result.removed]
        if not dead:
            steps.append(step)
            break
        nxt = min(dead, key=lambda c: (result.removed[c].round, c))
        answer = result.nodes[nxt]
        step.defender = render(answer.right if ob.side == 0 else answer.left)
        steps.append(step)
        key = nxt
    return steps


def replay(witness: list[WitnessStep], game: Game, root: Node) -> bool:
    """Re-run a witness: every move must exist and the last challenge must have no answer."""
    node = root
    for step in witness:
        if step.action == "barbs":
            return game.barbs(node.typing, node.left) != game.barbs(node.typing, node.right)
        side = 0 if step.side == "left" else 1
        moves, _ = game.challenges(node, side)
        chosen = [(t, ty) for t, ty in moves if t.action.key == step.action and render(t.target) == step.challenger]
        if not chosen:
            return False
        t, typing = chosen[0]
        answers, _ = game.answers(node, side, t, typing)
        if step.defender is None:
            return not answers
        matching = [a for a in answers if render(a.right if side == 0 else a.left) == step.defender]
        if not matching:
            return False
        node = matching[0]
    return False
