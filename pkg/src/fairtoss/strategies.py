"""Proposer and chooser policies.

Proposers set the bonus b: truthfully at their own indifference point, or
strategically as a best response to a belief about the chooser.  Choosers
pick a bundle: rationally by argmax utility, or habitually with a
stubbornness allowance for their preferred turn.

A habitual chooser stays with its preferred turn until that bundle falls
more than s runs behind even (utility below the utility of -s runs); at
exactly the boundary it stays.  Against such a chooser the best response is
to push the bonus to the chooser's indifference magnitude plus s, which is
how a 50-run advantage turns into a 70-run proposal under a 20-run bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidParametersError, ProtocolViolationError
from .mechanism import OptionBundle, Proposal, Turn, build_proposal
from .valuation import (
    ValuationView,
    advantageous_turn_for,
    indifference_bonus,
    utility,
    win_probability,
)

__all__ = [
    "ChooserBelief",
    "TruthfulProposer",
    "StrategicProposer",
    "RationalChooser",
    "HabitualChooser",
    "truthful_propose",
    "strategic_propose",
    "rational_choose",
    "habitual_choose",
    "build_proposer",
    "build_chooser",
]

#: Extra search room beyond |a| + s in the strategic grid, in runs.
STRATEGIC_MARGIN = 50.0


@dataclass(frozen=True, slots=True)
class ChooserBelief:
    """What a strategic proposer believes about the chooser: the turn the
    chooser is biased toward, how many runs of stubbornness shield that
    bias, and the probability the belief is right."""

    believed_bias_turn: Turn
    believed_stubbornness: float
    confidence: float

    def __post_init__(self) -> None:
        if self.believed_stubbornness < 0:
            raise InvalidParametersError(f"stubbornness must be >= 0, got {self.believed_stubbornness}")
        if not (0.0 <= self.confidence <= 1.0):
            raise InvalidParametersError(f"confidence must be in [0, 1], got {self.confidence}")


def truthful_propose(view: ValuationView, tolerance: float = 1e-9) -> tuple[float, Turn]:
    """Solve the proposer's own indifference point and declare the turn its
    perceived advantage points at."""
    return indifference_bonus(view, tolerance), advantageous_turn_for(view.perceived_advantage)


def rational_choose(proposal: Proposal, view: ValuationView) -> OptionBundle:
    """Argmax-utility bundle; an exact tie goes to option 1 (the declared
    advantageous turn), the protocol's fixed tie rule."""
    if utility(proposal.option1, view) >= utility(proposal.option2, view):
        return proposal.option1
    return proposal.option2


def habitual_choose(
    proposal: Proposal,
    view: ValuationView,
    habitual_turn: Turn,
    stubbornness: float,
) -> OptionBundle:
    """Stick with the habitual turn unless its bundle is worth less than
    being s runs behind even; at the boundary, stay.  Zero stubbornness is
    exactly rational choice."""
    if stubbornness < 0:
        raise InvalidParametersError(f"stubbornness must be >= 0, got {stubbornness}")
    if stubbornness == 0:
        return rational_choose(proposal, view)
    bias = proposal.option1 if proposal.option1.turn is habitual_turn else proposal.option2
    other = proposal.option2 if bias is proposal.option1 else proposal.option1
    if utility(bias, view) >= win_probability(-stubbornness, view.model):
        return bias
    return other


def strategic_propose(
    view: ValuationView,
    belief: ChooserBelief,
    grid_step: float = 1.0,
) -> tuple[float, Turn]:
    """Best-response bonus against a belief-weighted mix of a habitual and a
    rational chooser, by grid search over b in [0, |a| + s + margin].

    Both hypothetical choosers are evaluated under the proposer's own view
    (the proposer has no access to the chooser's private estimate).  The
    first maximizer wins ties, so with full confidence in a correct bias the
    search lands exactly on the boundary value |a| + s.
    """
    if not (grid_step > 0) or math.isinf(grid_step):
        raise InvalidParametersError(f"grid_step must be finite and > 0, got {grid_step}")
    turn = advantageous_turn_for(view.perceived_advantage)
    high = abs(view.perceived_advantage) + belief.believed_stubbornness + STRATEGIC_MARGIN
    steps = int(math.floor(high / grid_step))
    best_b = 0.0
    best_eu = -math.inf
    for i in range(steps + 1):
        b = i * grid_step
        proposal = build_proposal(b, turn)
        taken_h = habitual_choose(proposal, view, belief.believed_bias_turn, belief.believed_stubbornness)
        taken_r = rational_choose(proposal, view)
        mine_h = proposal.option2 if taken_h is proposal.option1 else proposal.option1
        mine_r = proposal.option2 if taken_r is proposal.option1 else proposal.option1
        eu = belief.confidence * utility(mine_h, view) + (1.0 - belief.confidence) * utility(mine_r, view)
        if eu > best_eu:
            best_eu = eu
            best_b = b
    return best_b, turn


@dataclass(frozen=True, slots=True)
class TruthfulProposer:
    solver_tolerance: float = 1e-9

    def propose(self, view: ValuationView) -> tuple[float, Turn]:
        return truthful_propose(view, self.solver_tolerance)

    def to_dict(self) -> dict:
        return {"kind": "truthful"}


@dataclass(frozen=True, slots=True)
class StrategicProposer:
    belief: ChooserBelief
    grid_step: float = 1.0

    def propose(self, view: ValuationView) -> tuple[float, Turn]:
        return strategic_propose(view, self.belief, self.grid_step)

    def to_dict(self) -> dict:
        return {
            "kind": "strategic",
            "belief": {
                "turn": self.belief.believed_bias_turn.value,
                "s": self.belief.believed_stubbornness,
                "confidence": self.belief.confidence,
            },
            "grid_step": self.grid_step,
        }


@dataclass(frozen=True, slots=True)
class RationalChooser:
    def choose(self, proposal: Proposal, view: ValuationView) -> OptionBundle:
        return rational_choose(proposal, view)

    def to_dict(self) -> dict:
        return {"kind": "rational"}


@dataclass(frozen=True, slots=True)
class HabitualChooser:
    habitual_turn: Turn
    stubbornness: float

    def __post_init__(self) -> None:
        if self.stubbornness < 0:
            raise InvalidParametersError(f"stubbornness must be >= 0, got {self.stubbornness}")

    def choose(self, proposal: Proposal, view: ValuationView) -> OptionBundle:
        return habitual_choose(proposal, view, self.habitual_turn, self.stubbornness)

    def to_dict(self) -> dict:
        return {"kind": "habitual", "turn": self.habitual_turn.value, "s": self.stubbornness}


def _parse_turn(value: str, where: str) -> Turn:
    try:
        return Turn(value)
    except ValueError:
        raise ProtocolViolationError(f"{where}: unknown turn {value!r}") from None


def build_proposer(descriptor: dict) -> TruthfulProposer | StrategicProposer:
    """Proposer from a config descriptor: {kind, belief?: {turn, s, confidence}}."""
    kind = descriptor.get("kind", "truthful")
    if kind == "truthful":
        return TruthfulProposer()
    if kind == "strategic":
        raw = descriptor.get("belief")
        if not isinstance(raw, dict):
            raise InvalidParametersError("strategic proposer requires a belief descriptor")
        belief = ChooserBelief(
            believed_bias_turn=_parse_turn(raw.get("turn", ""), "belief.turn"),
            believed_stubbornness=float(raw.get("s", 0.0)),
            confidence=float(raw.get("confidence", 1.0)),
        )
        return StrategicProposer(belief=belief, grid_step=float(descriptor.get("grid_step", 1.0)))
    raise InvalidParametersError(f"unknown proposer kind {kind!r}")


def build_chooser(descriptor: dict) -> RationalChooser | HabitualChooser:
    """Chooser from a config descriptor: {kind, turn?, s?}."""
    kind = descriptor.get("kind", "rational")
    if kind == "rational":
        return RationalChooser()
    if kind == "habitual":
        return HabitualChooser(
            habitual_turn=_parse_turn(descriptor.get("turn", ""), "chooser.turn"),
            stubbornness=float(descriptor.get("s", 0.0)),
        )
    raise InvalidParametersError(f"unknown chooser kind {kind!r}")
