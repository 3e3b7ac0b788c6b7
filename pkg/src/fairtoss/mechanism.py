"""Toss-Propose-Choose protocol core.

The protocol is a three-step state machine: a coin toss assigns the Lucky
(winner) and Unlucky (loser) captains; the Unlucky captain proposes a
bonus-run handicap b that splits the decision into two option bundles; the
Lucky captain picks one bundle and the Unlucky captain receives the other.

Bonus runs are real-valued while strategies solve for them and are rounded
to whole runs (nearest, ties to even) when a proposal enters the protocol;
the raw solve is kept in the transcript.  The transcript is an append-only
event list so the CLI, the session service, and any client replay it
identically.

Transcript schema (canonical JSON, sorted keys):

    {
      "schema": "tpc-transcript/1",
      "teams": [team_a, team_b],
      "toss": {"coin_draw", "lucky", "unlucky", "seed_trace"} | null,
      "proposal": {"b", "b_raw", "advantageous_turn",
                   "option1": {"turn", "bonus_delta"},
                   "option2": {"turn", "bonus_delta"}} | null,
      "allocation": {"chooser", "other", "chosen", "complement",
                     "bonus_recipient", "bonus_runs"} | null,
      "events": [{"type": "tossed" | "proposed" | "chosen", ...}]
    }
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Any, Protocol

import numpy as np

from .errors import InvalidMatchError, InvalidProposalError, ProtocolViolationError

__all__ = [
    "Turn",
    "TossOutcome",
    "OptionBundle",
    "Proposal",
    "Allocation",
    "EnvyReport",
    "Phase",
    "ProtocolRun",
    "run_toss",
    "toss_from_bit",
    "build_proposal",
    "check_envy_free",
    "round_runs",
    "canonical_json",
    "replay_transcript",
]

TRANSCRIPT_SCHEMA = "tpc-transcript/1"


class Turn(enum.Enum):
    """Which innings a team takes first."""

    BAT_FIRST = "bat_first"
    BOWL_FIRST = "bowl_first"

    @property
    def other(self) -> "Turn":
        return Turn.BOWL_FIRST if self is Turn.BAT_FIRST else Turn.BAT_FIRST


def round_runs(b: float) -> float:
    """Round to whole runs, nearest with ties to even."""
    return float(round(b))


@dataclass(frozen=True, slots=True)
class TossOutcome:
    """Result of the coin toss: who is Lucky (winner) and Unlucky (loser)."""

    lucky: str
    unlucky: str
    coin_draw: int
    seed_trace: str

    def __post_init__(self) -> None:
        if self.lucky == self.unlucky:
            raise InvalidMatchError(f"toss requires two distinct teams, got {self.lucky!r} twice")
        if self.coin_draw not in (0, 1):
            raise ValueError(f"coin_draw must be 0 or 1, got {self.coin_draw}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "lucky": self.lucky,
            "unlucky": self.unlucky,
            "coin_draw": self.coin_draw,
            "seed_trace": self.seed_trace,
        }


@dataclass(frozen=True, slots=True)
class OptionBundle:
    """One side of a proposal: a turn plus signed bonus runs for its holder.

    Negative bonus_delta means the holder concedes that many runs to the
    opponent's scoreboard.
    """

    turn: Turn
    bonus_delta: float

    def to_dict(self) -> dict[str, Any]:
        return {"turn": self.turn.value, "bonus_delta": self.bonus_delta}


@dataclass(frozen=True, slots=True)
class Proposal:
    """The Unlucky captain's offer: take the advantageous turn and concede b,
    or take the other turn and receive b."""

    b: float
    advantageous_turn: Turn
    option1: OptionBundle
    option2: OptionBundle
    b_raw: float = None  # type: ignore[assignment]  # pre-rounding solve, defaults to b

    def __post_init__(self) -> None:
        if self.b_raw is None:
            object.__setattr__(self, "b_raw", self.b)
        if not (self.b >= 0.0) or math.isinf(self.b):
            raise InvalidProposalError(f"bonus runs must be finite and >= 0, got {self.b}")
        if self.option1.turn != self.advantageous_turn or self.option2.turn != self.advantageous_turn.other:
            raise InvalidProposalError("option turns do not match the declared advantageous turn")
        if self.option1.bonus_delta != -self.b or self.option2.bonus_delta != self.b:
            raise InvalidProposalError("option bonus deltas must be -b and +b")

    def bundle(self, option: int) -> OptionBundle:
        if option == 1:
            return self.option1
        if option == 2:
            return self.option2
        raise ProtocolViolationError(f"option must be 1 or 2, got {option}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "b": self.b,
            "b_raw": self.b_raw,
            "advantageous_turn": self.advantageous_turn.value,
            "option1": self.option1.to_dict(),
            "option2": self.option2.to_dict(),
        }


def build_proposal(b: float, advantageous_turn: Turn, b_raw: float | None = None) -> Proposal:
    """Build the two option bundles induced by bonus value b.

    Option 1 takes the advantageous turn and concedes b; option 2 takes the
    other turn and receives b.  Negative b is a caller error: a negative
    estimate means the advantageous turn was mislabeled.
    """
    if not (b >= 0.0) or math.isinf(b):
        raise InvalidProposalError(f"bonus runs must be finite and >= 0, got {b}")
    return Proposal(
        b=float(b),
        advantageous_turn=advantageous_turn,
        option1=OptionBundle(advantageous_turn, -float(b)),
        option2=OptionBundle(advantageous_turn.other, float(b)),
        b_raw=float(b) if b_raw is None else float(b_raw),
    )


@dataclass(frozen=True, slots=True)
class Allocation:
    """Final assignment after the Lucky captain's choice."""

    chooser: str
    other: str
    chosen: OptionBundle
    complement: OptionBundle
    bonus_recipient: str | None
    bonus_runs: float

    def __post_init__(self) -> None:
        if self.chosen.turn == self.complement.turn:
            raise ValueError("chosen and complement must take opposite turns")
        if self.bonus_runs < 0:
            raise ValueError("bonus_runs must be >= 0")

    def holder(self, bundle: OptionBundle) -> str:
        if bundle is self.chosen or bundle == self.chosen:
            return self.chooser
        return self.other

    @property
    def first_batter(self) -> str:
        return self.chooser if self.chosen.turn is Turn.BAT_FIRST else self.other

    @property
    def second_batter(self) -> str:
        return self.other if self.chosen.turn is Turn.BAT_FIRST else self.chooser

    def bonus_for(self, team: str) -> float:
        if self.bonus_recipient is None or team != self.bonus_recipient:
            return 0.0
        return self.bonus_runs

    def to_dict(self) -> dict[str, Any]:
        return {
            "chooser": self.chooser,
            "other": self.other,
            "chosen": self.chosen.to_dict(),
            "complement": self.complement.to_dict(),
            "bonus_recipient": self.bonus_recipient,
            "bonus_runs": self.bonus_runs,
        }


def make_allocation(chooser: str, other: str, chosen: OptionBundle, complement: OptionBundle) -> Allocation:
    """Assemble an Allocation, deriving the bonus recipient from the signs."""
    bonus = abs(chosen.bonus_delta)
    recipient: str | None = None
    if chosen.bonus_delta > 0:
        recipient = chooser
    elif complement.bonus_delta > 0:
        recipient = other
    return Allocation(
        chooser=chooser,
        other=other,
        chosen=chosen,
        complement=complement,
        bonus_recipient=recipient,
        bonus_runs=bonus,
    )


@dataclass(frozen=True, slots=True)
class EnvyReport:
    """Per-party envy gaps: own-bundle utility minus other-bundle utility,
    each measured under that party's own valuation."""

    proposer_envies: bool
    chooser_envies: bool
    proposer_gap: float
    chooser_gap: float

    @property
    def any_envy(self) -> bool:
        return self.proposer_envies or self.chooser_envies


class BundleValuation(Protocol):
    """Anything that can price an option bundle (see valuation.ValuationView)."""

    def bundle_utility(self, bundle: OptionBundle) -> float: ...


def check_envy_free(
    allocation: Allocation,
    proposer_valuation: BundleValuation,
    chooser_valuation: BundleValuation,
    tolerance: float = 1e-9,
) -> EnvyReport:
    """Gap < -tolerance under a party's own valuation flags that party as envious.

    The chooser holds the chosen bundle, the proposer the complement.
    """
    p_own = proposer_valuation.bundle_utility(allocation.complement)
    p_other = proposer_valuation.bundle_utility(allocation.chosen)
    c_own = chooser_valuation.bundle_utility(allocation.chosen)
    c_other = chooser_valuation.bundle_utility(allocation.complement)
    proposer_gap = p_own - p_other
    chooser_gap = c_own - c_other
    return EnvyReport(
        proposer_envies=proposer_gap < -tolerance,
        chooser_envies=chooser_gap < -tolerance,
        proposer_gap=proposer_gap,
        chooser_gap=chooser_gap,
    )


def toss_from_bit(team_a: str, team_b: str, coin_draw: int, seed_trace: str) -> TossOutcome:
    """Deterministic mapping: bit 0 means the first-listed team wins the toss."""
    if team_a == team_b:
        raise InvalidMatchError(f"a match needs two distinct teams, got {team_a!r} twice")
    if coin_draw == 0:
        return TossOutcome(lucky=team_a, unlucky=team_b, coin_draw=0, seed_trace=seed_trace)
    return TossOutcome(lucky=team_b, unlucky=team_a, coin_draw=1, seed_trace=seed_trace)


def run_toss(
    team_a: str,
    team_b: str,
    rng: np.random.Generator,
    seed_trace: str = "unspecified",
) -> TossOutcome:
    """Draw one uniform bit and assign Lucky/Unlucky roles."""
    if team_a == team_b:
        raise InvalidMatchError(f"a match needs two distinct teams, got {team_a!r} twice")
    coin_draw = int(rng.integers(0, 2))
    return toss_from_bit(team_a, team_b, coin_draw, seed_trace)


class Phase(enum.Enum):
    CREATED = "created"
    TOSSED = "tossed"
    PROPOSED = "proposed"
    COMPLETE = "complete"


_PHASE_ORDER = [Phase.CREATED, Phase.TOSSED, Phase.PROPOSED, Phase.COMPLETE]


@dataclass
class ProtocolRun:
    """Forward-only TOSS -> PROPOSE -> CHOOSE state machine with an
    append-only event transcript."""

    team_a: str
    team_b: str
    phase: Phase = Phase.CREATED
    toss: TossOutcome | None = None
    proposal: Proposal | None = None
    allocation: Allocation | None = None
    events: list[dict[str, Any]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.team_a == self.team_b:
            raise InvalidMatchError(f"a match needs two distinct teams, got {self.team_a!r} twice")

    def _require_phase(self, expected: Phase, action: str) -> None:
        if self.phase is not expected:
            raise ProtocolViolationError(
                f"cannot {action} in phase {self.phase.value!r}; requires {expected.value!r}"
            )

    def run_toss(self, rng: np.random.Generator, seed_trace: str = "unspecified") -> TossOutcome:
        self._require_phase(Phase.CREATED, "toss")
        return self.apply_toss(int(rng.integers(0, 2)), seed_trace)

    def apply_toss(self, coin_draw: int, seed_trace: str = "unspecified") -> TossOutcome:
        self._require_phase(Phase.CREATED, "toss")
        toss = toss_from_bit(self.team_a, self.team_b, coin_draw, seed_trace)
        self.toss = toss
        self.phase = Phase.TOSSED
        self.events.append({"type": "tossed", **toss.to_dict()})
        return toss

    def propose(self, b: float, advantageous_turn: Turn) -> Proposal:
        """Record the Unlucky captain's proposal; b is rounded to whole runs
        here (the protocol boundary) and the raw value kept alongside."""
        self._require_phase(Phase.TOSSED, "propose")
        if isinstance(b, bool) or not isinstance(b, (int, float)) or math.isnan(b):
            raise InvalidProposalError(f"bonus runs must be a number, got {b!r}")
        proposal = build_proposal(round_runs(b), advantageous_turn, b_raw=float(b))
        self.proposal = proposal
        self.phase = Phase.PROPOSED
        assert self.toss is not None
        self.events.append(
            {
                "type": "proposed",
                "proposer": self.toss.unlucky,
                "b": proposal.b,
                "b_raw": proposal.b_raw,
                "advantageous_turn": advantageous_turn.value,
            }
        )
        return proposal

    def choose(self, option: int) -> Allocation:
        self._require_phase(Phase.PROPOSED, "choose")
        if option not in (1, 2):
            raise ProtocolViolationError(f"option must be 1 or 2, got {option!r}")
        assert self.toss is not None and self.proposal is not None
        chosen = self.proposal.bundle(option)
        complement = self.proposal.bundle(2 if option == 1 else 1)
        allocation = make_allocation(self.toss.lucky, self.toss.unlucky, chosen, complement)
        self.allocation = allocation
        self.phase = Phase.COMPLETE
        self.events.append({"type": "chosen", "chooser": self.toss.lucky, "option": option})
        return allocation

    def transcript(self) -> dict[str, Any]:
        return {
            "schema": TRANSCRIPT_SCHEMA,
            "teams": [self.team_a, self.team_b],
            "toss": self.toss.to_dict() if self.toss else None,
            "proposal": self.proposal.to_dict() if self.proposal else None,
            "allocation": self.allocation.to_dict() if self.allocation else None,
            "events": list(self.events),
        }


def canonical_json(obj: Any) -> str:
    """Canonical serialization: sorted keys, no whitespace."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def replay_transcript(transcript: dict[str, Any]) -> dict[str, Any]:
    """Re-execute a recorded transcript by folding its events through a fresh
    protocol run and return the re-emitted transcript.

    The result equals the input byte-for-byte (after canonical ordering) for
    any transcript this package produced; a mismatch means the transcript was
    edited or is from an incompatible schema.
    """
    if transcript.get("schema") != TRANSCRIPT_SCHEMA:
        raise ProtocolViolationError(f"unsupported transcript schema: {transcript.get('schema')!r}")
    teams = transcript.get("teams")
    if not isinstance(teams, list) or len(teams) != 2:
        raise ProtocolViolationError("transcript must list exactly two teams")
    run = ProtocolRun(team_a=teams[0], team_b=teams[1])
    for event in transcript.get("events", []):
        kind = event.get("type")
        if kind == "tossed":
            run.apply_toss(event["coin_draw"], event["seed_trace"])
        elif kind == "proposed":
            run.propose(event["b_raw"], Turn(event["advantageous_turn"]))
        elif kind == "chosen":
            run.choose(event["option"])
        else:
            raise ProtocolViolationError(f"unknown transcript event type: {kind!r}")
    return run.transcript()
