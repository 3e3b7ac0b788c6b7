"""Full TPC protocol execution: toss, policy-driven proposal, policy-driven
choice, with the transcript recorded in protocol order."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .errors import ProtocolViolationError
from .mechanism import (
    Allocation,
    EnvyReport,
    OptionBundle,
    Proposal,
    ProtocolRun,
    TossOutcome,
    Turn,
    check_envy_free,
)
from .valuation import DEFAULT_MODEL, MatchConditions, ValuationModel, ValuationView, draw_team_views

__all__ = ["ProposerPolicy", "ChooserPolicy", "TpcOutcome", "execute_tpc", "execute_tpc_from_draws"]


class ProposerPolicy(Protocol):
    def propose(self, view: ValuationView) -> tuple[float, Turn]: ...


class ChooserPolicy(Protocol):
    def choose(self, proposal: Proposal, view: ValuationView) -> OptionBundle: ...


@dataclass(frozen=True)
class TpcOutcome:
    """One complete protocol run plus the private views that produced it."""

    toss: TossOutcome
    proposal: Proposal
    allocation: Allocation
    proposer_view: ValuationView
    chooser_view: ValuationView
    run: ProtocolRun

    def transcript(self) -> dict:
        return self.run.transcript()

    def envy(self, tolerance: float = 1e-9) -> EnvyReport:
        return check_envy_free(self.allocation, self.proposer_view, self.chooser_view, tolerance)


def execute_tpc_from_draws(
    team_a: str,
    team_b: str,
    proposer_policy: ProposerPolicy,
    chooser_policy: ChooserPolicy,
    view_a: ValuationView,
    view_b: ValuationView,
    coin_draw: int,
    seed_trace: str = "unspecified",
) -> TpcOutcome:
    """Run the protocol against an already-drawn coin bit and per-team views."""
    run = ProtocolRun(team_a=team_a, team_b=team_b)
    toss = run.apply_toss(coin_draw, seed_trace)
    proposer_view = view_a if toss.unlucky == team_a else view_b
    chooser_view = view_a if toss.lucky == team_a else view_b

    b, turn = proposer_policy.propose(proposer_view)
    if isinstance(b, bool) or not isinstance(b, (int, float)) or math.isnan(b) or math.isinf(b) or b < 0:
        raise ProtocolViolationError(f"proposer policy returned out-of-domain bonus {b!r}")
    if not isinstance(turn, Turn):
        raise ProtocolViolationError(f"proposer policy returned an invalid turn {turn!r}")
    proposal = run.propose(float(b), turn)

    taken = chooser_policy.choose(proposal, chooser_view)
    if taken == proposal.option1:
        option = 1
    elif taken == proposal.option2:
        option = 2
    else:
        raise ProtocolViolationError(f"chooser policy returned a bundle outside the proposal: {taken!r}")
    run.choose(option)
    assert run.allocation is not None
    return TpcOutcome(
        toss=toss,
        proposal=proposal,
        allocation=run.allocation,
        proposer_view=proposer_view,
        chooser_view=chooser_view,
        run=run,
    )


def execute_tpc(
    team_a: str,
    team_b: str,
    proposer_policy: ProposerPolicy,
    chooser_policy: ChooserPolicy,
    conditions: MatchConditions,
    rng: np.random.Generator,
    model: ValuationModel = DEFAULT_MODEL,
    seed_trace: str = "unspecified",
) -> TpcOutcome:
    """TOSS, PROPOSE, CHOOSE with the coin and any view noise drawn from rng
    (coin first, then noise; no noise draw when the noise sd is zero)."""
    coin_draw = int(rng.integers(0, 2))
    view_a, view_b = draw_team_views(team_a, team_b, conditions, model, rng)
    return execute_tpc_from_draws(
        team_a, team_b, proposer_policy, chooser_policy, view_a, view_b, coin_draw, seed_trace
    )
