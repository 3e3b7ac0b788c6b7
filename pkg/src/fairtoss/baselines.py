"""Alternative turn-assignment mechanisms the fair toss is compared against:
the traditional toss, series alternation, weaker-or-touring-team decides,
and a first-price sealed-bid auction in conceded runs.

All of them return the same Allocation shape the TPC protocol produces, so
the simulation harness treats the five mechanisms uniformly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import InvalidParametersError, UndecidableMechanismError
from .mechanism import (
    Allocation,
    OptionBundle,
    TossOutcome,
    Turn,
    build_proposal,
    make_allocation,
    round_runs,
    run_toss,
    toss_from_bit,
)
from .strategies import rational_choose
from .valuation import ValuationView, advantageous_turn_for

__all__ = [
    "MechanismKind",
    "SeriesState",
    "Bid",
    "BaselineOutcome",
    "AuctionOutcome",
    "plain_toss",
    "plain_toss_from_bit",
    "alternation",
    "alternation_from_draws",
    "weaker_decides",
    "auction",
    "auction_from_draws",
]


class MechanismKind(enum.Enum):
    PLAIN_TOSS = "plain_toss"
    TPC = "tpc"
    ALTERNATION = "alternation"
    WEAKER_DECIDES = "weaker_decides"
    AUCTION = "auction"


@dataclass(frozen=True, slots=True)
class SeriesState:
    """Where a series stands: 1-based match number and who batted first last."""

    match_index: int = 1
    last_first_batter: str | None = None

    def __post_init__(self) -> None:
        if self.match_index < 1:
            raise InvalidParametersError(f"match_index must be >= 1, got {self.match_index}")

    def next_after(self, first_batter: str) -> "SeriesState":
        return SeriesState(match_index=self.match_index + 1, last_first_batter=first_batter)


@dataclass(frozen=True, slots=True)
class Bid:
    """Sealed bid: runs a team is willing to concede for the right to choose."""

    team: str
    bid_runs: float

    def __post_init__(self) -> None:
        if self.bid_runs < 0:
            raise InvalidParametersError(f"bid_runs must be >= 0, got {self.bid_runs}")


@dataclass(frozen=True, slots=True)
class BaselineOutcome:
    allocation: Allocation
    toss: TossOutcome | None


@dataclass(frozen=True, slots=True)
class AuctionOutcome:
    allocation: Allocation
    bids: tuple[Bid, Bid]
    tie_broken_by_coin: bool


def _zero_bonus_choice(chooser: str, other: str, view: ValuationView) -> Allocation:
    """The decider picks a bare turn: a zero-bonus proposal put through the
    rational chooser, so the tie rule matches the TPC protocol exactly."""
    proposal = build_proposal(0.0, advantageous_turn_for(view.perceived_advantage))
    taken = rational_choose(proposal, view)
    left = proposal.option2 if taken is proposal.option1 else proposal.option1
    return make_allocation(chooser, other, taken, left)


def plain_toss_from_bit(
    team_a: str,
    team_b: str,
    view_a: ValuationView,
    view_b: ValuationView,
    coin_draw: int,
    seed_trace: str = "unspecified",
) -> BaselineOutcome:
    toss = toss_from_bit(team_a, team_b, coin_draw, seed_trace)
    winner_view = view_a if toss.lucky == team_a else view_b
    allocation = _zero_bonus_choice(toss.lucky, toss.unlucky, winner_view)
    return BaselineOutcome(allocation=allocation, toss=toss)


def plain_toss(
    team_a: str,
    team_b: str,
    view_a: ValuationView,
    view_b: ValuationView,
    rng: np.random.Generator,
    seed_trace: str = "unspecified",
) -> BaselineOutcome:
    """Traditional rule: the toss winner just picks a turn, no bonus runs."""
    toss = run_toss(team_a, team_b, rng, seed_trace)
    winner_view = view_a if toss.lucky == team_a else view_b
    allocation = _zero_bonus_choice(toss.lucky, toss.unlucky, winner_view)
    return BaselineOutcome(allocation=allocation, toss=toss)


def alternation_from_draws(
    team_a: str,
    team_b: str,
    series: SeriesState,
    view_a: ValuationView,
    view_b: ValuationView,
    coin_draw: int,
    seed_trace: str = "unspecified",
) -> tuple[BaselineOutcome, SeriesState]:
    """Alternation with the (possibly unused) opening coin already drawn."""
    if series.last_first_batter is None:
        outcome = plain_toss_from_bit(team_a, team_b, view_a, view_b, coin_draw, seed_trace)
        return outcome, series.next_after(outcome.allocation.first_batter)
    first = team_b if series.last_first_batter == team_a else team_a
    second = team_a if first == team_b else team_b
    allocation = make_allocation(
        first, second, OptionBundle(Turn.BAT_FIRST, 0.0), OptionBundle(Turn.BOWL_FIRST, 0.0)
    )
    return BaselineOutcome(allocation=allocation, toss=None), series.next_after(first)


def alternation(
    team_a: str,
    team_b: str,
    series: SeriesState,
    view_a: ValuationView,
    view_b: ValuationView,
    rng: np.random.Generator,
    seed_trace: str = "unspecified",
) -> tuple[BaselineOutcome, SeriesState]:
    """First match of a series is a plain toss; afterwards the first batter
    flips every match.  Returns the outcome and the advanced series state."""
    coin_draw = int(rng.integers(0, 2)) if series.last_first_batter is None else 0
    return alternation_from_draws(team_a, team_b, series, view_a, view_b, coin_draw, seed_trace)


def weaker_decides(
    team_a: str,
    team_b: str,
    strengths: Mapping[str, float],
    home: str | None,
    view_a: ValuationView,
    view_b: ValuationView,
) -> BaselineOutcome:
    """The weaker team (by strength rating), or the touring team when ratings
    tie, picks its turn.  Equal ratings on neutral ground are undecidable,
    which is this rule's own failure mode."""
    for team in (team_a, team_b):
        if team not in strengths:
            raise InvalidParametersError(f"no strength rating for team {team!r}")
    if home is not None and home not in (team_a, team_b):
        raise InvalidParametersError(f"home team {home!r} is not playing")
    if strengths[team_a] != strengths[team_b]:
        decider = team_a if strengths[team_a] < strengths[team_b] else team_b
    elif home is not None:
        decider = team_b if home == team_a else team_a
    else:
        raise UndecidableMechanismError(
            "equal rankings on neutral ground: neither weaker nor touring team exists"
        )
    other = team_b if decider == team_a else team_a
    view = view_a if decider == team_a else view_b
    allocation = _zero_bonus_choice(decider, other, view)
    return BaselineOutcome(allocation=allocation, toss=None)


def auction_from_draws(
    team_a: str,
    team_b: str,
    view_a: ValuationView,
    view_b: ValuationView,
    tie_bit: int,
) -> AuctionOutcome:
    """First-price sealed-bid auction with the tie coin already drawn."""
    bid_a = Bid(team_a, round_runs(abs(view_a.perceived_advantage)))
    bid_b = Bid(team_b, round_runs(abs(view_b.perceived_advantage)))
    tie = bid_a.bid_runs == bid_b.bid_runs
    if tie:
        winner = team_a if tie_bit == 0 else team_b
    else:
        winner = team_a if bid_a.bid_runs > bid_b.bid_runs else team_b
    loser = team_b if winner == team_a else team_a
    winner_view = view_a if winner == team_a else view_b
    winning_bid = bid_a.bid_runs if winner == team_a else bid_b.bid_runs
    preferred = advantageous_turn_for(winner_view.perceived_advantage)
    chosen = OptionBundle(preferred, -winning_bid)
    complement = OptionBundle(preferred.other, winning_bid)
    allocation = make_allocation(winner, loser, chosen, complement)
    return AuctionOutcome(allocation=allocation, bids=(bid_a, bid_b), tie_broken_by_coin=tie)


def auction(
    team_a: str,
    team_b: str,
    view_a: ValuationView,
    view_b: ValuationView,
    tie_rng: np.random.Generator,
) -> AuctionOutcome:
    """Each team bids its perceived indifference magnitude, rounded to whole
    runs; the higher bidder takes its preferred turn and concedes its bid to
    the other side; identical bids are broken by a coin."""
    return auction_from_draws(team_a, team_b, view_a, view_b, int(tie_rng.integers(0, 2)))
