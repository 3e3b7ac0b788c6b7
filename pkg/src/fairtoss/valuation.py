"""Run advantages, win probabilities, and the indifference-bonus solver.

Sign convention used everywhere: a positive (true or perceived) advantage
means batting first is the advantageous turn; negative means bowling first
is.  An option bundle's effective advantage to its holder is the turn's
signed advantage plus the bundle's bonus delta, so the two bundles of any
proposal always carry exactly opposite effective advantages.

For every strictly increasing utility model the indifference bonus is the
magnitude of the perceived advantage; the solver still finds it by monotone
bisection so that non-standard models keep working and tests can check the
analytic value independently.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidModelError, SolverFailureError
from .mechanism import OptionBundle, Turn, build_proposal

__all__ = [
    "ModelKind",
    "ValuationModel",
    "MatchConditions",
    "ValuationView",
    "DEFAULT_MODEL",
    "advantageous_turn_for",
    "effective_advantage",
    "win_probability",
    "utility",
    "indifference_bonus",
    "perceive_advantage",
    "draw_team_views",
]

NOISE_CLIP_SDS = 3.0


class ModelKind(enum.Enum):
    LINEAR_RUNS = "linear"
    LOGISTIC_WIN_PROB = "logistic"
    SCORE_SIMULATION = "score_sim"


#: Half-width of the linear model's unclamped range, in runs.
LINEAR_DEFAULT_RANGE = 1000.0


@dataclass(frozen=True, slots=True)
class ValuationModel:
    """Maps an effective run advantage to a utility in [0, 1].

    sigma is the logistic slope for LOGISTIC_WIN_PROB, the per-innings score
    standard deviation for SCORE_SIMULATION, and the clamp half-width for
    LINEAR_RUNS (defaulted when omitted; the linear map is only used for
    ordering).
    """

    kind: ModelKind
    sigma: float = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.sigma is None:
            if self.kind is ModelKind.LINEAR_RUNS:
                object.__setattr__(self, "sigma", LINEAR_DEFAULT_RANGE)
            else:
                raise InvalidModelError(f"{self.kind.value} model requires a sigma scale")
        if not (self.sigma > 0) or math.isinf(self.sigma):
            raise InvalidModelError(f"model sigma must be finite and > 0, got {self.sigma}")

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "sigma": self.sigma}


DEFAULT_MODEL = ValuationModel(ModelKind.LOGISTIC_WIN_PROB, 30.0)


@dataclass(frozen=True, slots=True)
class MatchConditions:
    """Ground truth for a scenario: the real advantage of batting first (in
    runs, negative when chasing is better), per-team estimation noise, and
    the per-innings score distribution."""

    true_advantage: float
    advantage_noise_sd: float = 0.0
    score_mean: float = 160.0
    score_sd: float = 30.0

    def __post_init__(self) -> None:
        if not (self.score_sd > 0):
            raise ValueError(f"score_sd must be > 0, got {self.score_sd}")
        if self.advantage_noise_sd < 0:
            raise ValueError(f"advantage_noise_sd must be >= 0, got {self.advantage_noise_sd}")

    def to_dict(self) -> dict:
        return {
            "true_advantage": self.true_advantage,
            "advantage_noise_sd": self.advantage_noise_sd,
            "score_mean": self.score_mean,
            "score_sd": self.score_sd,
        }


@dataclass(frozen=True, slots=True)
class ValuationView:
    """One team's private judgment: its perceived advantage and its model."""

    team: str
    perceived_advantage: float
    model: ValuationModel

    def __post_init__(self) -> None:
        if not math.isfinite(self.perceived_advantage):
            raise ValueError(f"perceived advantage must be finite, got {self.perceived_advantage}")

    def bundle_utility(self, bundle: OptionBundle) -> float:
        return utility(bundle, self)


def advantageous_turn_for(perceived_advantage: float) -> Turn:
    """Turn the advantage sign points at; exactly balanced defaults to batting
    first (the same convention the plain toss uses to break ties)."""
    return Turn.BOWL_FIRST if perceived_advantage < 0 else Turn.BAT_FIRST


def effective_advantage(bundle: OptionBundle, view: ValuationView) -> float:
    """Net run advantage of holding a bundle: signed turn advantage plus the
    bundle's bonus runs."""
    a_hat = view.perceived_advantage
    turn_term = a_hat if bundle.turn is Turn.BAT_FIRST else -a_hat
    return turn_term + bundle.bonus_delta


def win_probability(delta: float, model: ValuationModel) -> float:
    """Probability-scale utility of a net run advantage delta."""
    if model.kind is ModelKind.LOGISTIC_WIN_PROB:
        x = delta / model.sigma
        if x >= 0:
            return 1.0 / (1.0 + math.exp(-x))
        e = math.exp(x)
        return e / (1.0 + e)
    if model.kind is ModelKind.SCORE_SIMULATION:
        # Win prob of a delta-run head start when both scores are
        # Normal(mu, sigma): Phi(delta / (sigma * sqrt(2))).
        z = delta / (model.sigma * math.sqrt(2.0))
        return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))
    # Linear: affine in runs, clamped to [0, 1]; ordering only.
    return min(1.0, max(0.0, 0.5 + delta / (2.0 * model.sigma)))


def utility(bundle: OptionBundle, view: ValuationView) -> float:
    return win_probability(effective_advantage(bundle, view), view.model)


def indifference_bonus(view: ValuationView, tolerance: float = 1e-9, max_iterations: int = 200) -> float:
    """Bonus b* that makes the view's two option bundles equally attractive.

    Monotone bisection of u(option1) - u(option2) over [0, |a| + 100]; the
    difference is strictly decreasing in b for any increasing model, so the
    bracket provably contains the root.  A bracket without the expected signs
    means the model is not increasing.
    """
    magnitude = abs(view.perceived_advantage)
    turn = advantageous_turn_for(view.perceived_advantage)

    def gap(b: float) -> float:
        proposal = build_proposal(b, turn)
        return utility(proposal.option1, view) - utility(proposal.option2, view)

    lo, hi = 0.0, magnitude + 100.0
    gap_lo, gap_hi = gap(lo), gap(hi)
    if gap_lo < -1e-12 or gap_hi > 1e-12:
        raise SolverFailureError(
            f"cannot bracket indifference point (gap({lo})={gap_lo}, gap({hi})={gap_hi}); "
            "model is not strictly increasing"
        )
    if gap_lo <= 0.0:
        return 0.0
    for _ in range(max_iterations):
        if hi - lo <= tolerance:
            break
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def perceive_advantage(conditions: MatchConditions, z: float) -> float:
    """Perceived advantage given a standard-normal draw z; noise is clipped
    at +/-3 sd so heavy draws cannot destabilize small-sample runs."""
    clipped = min(NOISE_CLIP_SDS, max(-NOISE_CLIP_SDS, z))
    return conditions.true_advantage + clipped * conditions.advantage_noise_sd


def draw_team_views(
    team_a: str,
    team_b: str,
    conditions: MatchConditions,
    model: ValuationModel,
    rng: np.random.Generator,
) -> tuple[ValuationView, ValuationView]:
    """Per-team views of the same conditions.  Consumes no randomness when
    the noise sd is zero, so seeded streams stay aligned across mechanisms."""
    if conditions.advantage_noise_sd > 0:
        z = rng.standard_normal(2)
        a_hat_a = perceive_advantage(conditions, float(z[0]))
        a_hat_b = perceive_advantage(conditions, float(z[1]))
    else:
        a_hat_a = a_hat_b = conditions.true_advantage
    return (
        ValuationView(team=team_a, perceived_advantage=a_hat_a, model=model),
        ValuationView(team=team_b, perceived_advantage=a_hat_b, model=model),
    )
