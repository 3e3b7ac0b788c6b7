"""Monte Carlo harness: the run-denominated match outcome model, scenario
configs, mechanism experiments with fairness metrics, and report files.

Outcome model: each innings score is Normal(score_mean, score_sd); the
first batter's score is shifted by the true advantage and the bonus
recipient's score by the bonus runs; higher adjusted score wins.  The win
probability of the side batting first is therefore
Phi((advantage + bonus_first - bonus_second) / (score_sd * sqrt(2))),
which is the analytic oracle used to calibrate scenarios.

Replication i of an experiment consumes row i of per-purpose draw arrays
("toss", "views", "match", "tie"), each a deterministic substream of
(seed, purpose).  Aggregates are symmetric functions of the rows, so serial,
permuted, or parallel execution produce identical reports, and mechanisms
compared under one seed share their random numbers.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Any, Iterator, Mapping, Sequence

import numpy as np

from .baselines import (
    AuctionOutcome,
    BaselineOutcome,
    MechanismKind,
    SeriesState,
    alternation_from_draws,
    auction_from_draws,
    plain_toss_from_bit,
    weaker_decides,
)
from .engine import execute_tpc_from_draws
from .errors import ComparisonInvalidError, ConfigError, ReportIOError
from .mechanism import Allocation, Turn, check_envy_free
from .strategies import build_chooser, build_proposer
from .streams import substream
from .valuation import (
    MatchConditions,
    ModelKind,
    ValuationModel,
    ValuationView,
    perceive_advantage,
    win_probability,
)

__all__ = [
    "MatchResult",
    "ScenarioConfig",
    "MetricValue",
    "ExperimentReport",
    "ComparisonTable",
    "simulate_match",
    "match_from_scores",
    "first_batter_win_probability",
    "calibrate_chase_advantage",
    "run_experiment",
    "compare_mechanisms",
    "write_report",
    "read_report",
]


# ---------------------------------------------------------------------------
# Match outcome model
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class MatchResult:
    """One simulated match.  A drawn match (exact adjusted-score tie) has no
    winner and is excluded from rate denominators downstream."""

    winner: str | None
    margin: float
    first_batter: str
    bonus_applied: tuple[str, float] | None
    toss_winner: str | None
    drawn: bool


def match_from_scores(
    allocation: Allocation,
    conditions: MatchConditions,
    scores: Mapping[str, float],
    toss_winner: str | None = None,
) -> MatchResult:
    """Decide a match from already-drawn innate innings scores."""
    first = allocation.first_batter
    second = allocation.second_batter
    adj_first = scores[first] + conditions.true_advantage + allocation.bonus_for(first)
    adj_second = scores[second] + allocation.bonus_for(second)
    if adj_first > adj_second:
        winner: str | None = first
    elif adj_second > adj_first:
        winner = second
    else:
        winner = None
    recipient = allocation.bonus_recipient
    return MatchResult(
        winner=winner,
        margin=abs(adj_first - adj_second),
        first_batter=first,
        bonus_applied=(recipient, allocation.bonus_runs) if recipient is not None else None,
        toss_winner=toss_winner,
        drawn=winner is None,
    )


def simulate_match(
    allocation: Allocation,
    conditions: MatchConditions,
    rng: np.random.Generator,
    toss_winner: str | None = None,
) -> MatchResult:
    """Draw both innings scores (batting order) and decide the match."""
    drawn = rng.normal(conditions.score_mean, conditions.score_sd, 2)
    scores = {allocation.first_batter: float(drawn[0]), allocation.second_batter: float(drawn[1])}
    return match_from_scores(allocation, conditions, scores, toss_winner)


def first_batter_win_probability(
    conditions: MatchConditions,
    bonus_first: float = 0.0,
    bonus_second: float = 0.0,
) -> float:
    """Analytic win probability of the side batting first."""
    shift = conditions.true_advantage + bonus_first - bonus_second
    return NormalDist().cdf(shift / (conditions.score_sd * math.sqrt(2.0)))


def calibrate_chase_advantage(chase_win_rate: float, score_sd: float) -> float:
    """True advantage (negative: chasing is better) that gives the chasing
    side the target win rate when the toss winner always chases."""
    if not (0.0 < chase_win_rate < 1.0):
        raise ConfigError("chase_win_rate", f"must be in (0, 1), got {chase_win_rate}")
    return -NormalDist().inv_cdf(chase_win_rate) * score_sd * math.sqrt(2.0)


# ---------------------------------------------------------------------------
# Scenario configuration
# ---------------------------------------------------------------------------

_MODEL_KINDS = {kind.value: kind for kind in ModelKind}
_MECHANISMS = {kind.value: kind for kind in MechanismKind}


@dataclass(frozen=True)
class ScenarioConfig:
    """One experiment: conditions, valuation model, strategy descriptors,
    mechanism, and replication/seed bookkeeping."""

    conditions: MatchConditions
    model: ValuationModel
    mechanism: MechanismKind = MechanismKind.TPC
    team_a: str = "AUS"
    team_b: str = "NZL"
    proposer: dict = field(default_factory=lambda: {"kind": "truthful"})
    chooser: dict = field(default_factory=lambda: {"kind": "rational"})
    replications: int = 1
    seed: int = 0
    series_length: int = 1
    strengths: dict | None = None
    home: str | None = None
    envy_tolerance_runs: float = 0.5

    def __post_init__(self) -> None:
        if self.team_a == self.team_b:
            raise ConfigError("teams", "two distinct team labels required")
        if self.replications < 1:
            raise ConfigError("replications", f"must be >= 1, got {self.replications}")
        if self.series_length < 1:
            raise ConfigError("series_length", f"must be >= 1, got {self.series_length}")
        if self.envy_tolerance_runs < 0:
            raise ConfigError("envy_tolerance_runs", "must be >= 0")

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ScenarioConfig":
        def need(section: Mapping[str, Any], key: str, path: str) -> Any:
            if key not in section:
                raise ConfigError(path, "missing required field")
            return section[key]

        def number(value: Any, path: str) -> float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(path, f"expected a number, got {value!r}")
            return float(value)

        teams = raw.get("teams", ["AUS", "NZL"])
        if not (isinstance(teams, (list, tuple)) and len(teams) == 2 and teams[0] != teams[1]):
            raise ConfigError("teams", "expected two distinct team labels")

        mech_name = raw.get("mechanism", "tpc")
        if mech_name not in _MECHANISMS:
            raise ConfigError("mechanism", f"unknown mechanism {mech_name!r}")

        cond_raw = raw.get("conditions")
        if not isinstance(cond_raw, Mapping):
            raise ConfigError("conditions", "missing conditions section")
        val_raw = raw.get("valuation", {})
        if not isinstance(val_raw, Mapping):
            raise ConfigError("valuation", "expected a mapping")

        noise = val_raw.get("noise_sd", None)
        cond_noise = cond_raw.get("advantage_noise_sd", None)
        if noise is not None and cond_noise is not None and float(noise) != float(cond_noise):
            raise ConfigError(
                "valuation.noise_sd", "conflicts with conditions.advantage_noise_sd; set only one"
            )
        noise_sd = number(noise if noise is not None else (cond_noise or 0.0), "valuation.noise_sd")
        if noise_sd < 0:
            raise ConfigError("valuation.noise_sd", f"must be >= 0, got {noise_sd}")

        score_sd = number(cond_raw.get("score_sd", 30.0), "conditions.score_sd")
        if score_sd <= 0:
            raise ConfigError("conditions.score_sd", f"must be > 0, got {score_sd}")
        try:
            conditions = MatchConditions(
                true_advantage=number(need(cond_raw, "true_advantage", "conditions.true_advantage"),
                                      "conditions.true_advantage"),
                advantage_noise_sd=noise_sd,
                score_mean=number(cond_raw.get("score_mean", 160.0), "conditions.score_mean"),
                score_sd=score_sd,
            )
        except ValueError as exc:
            raise ConfigError("conditions", str(exc)) from exc

        kind_name = val_raw.get("kind", "logistic")
        if kind_name not in _MODEL_KINDS:
            raise ConfigError("valuation.kind", f"unknown model kind {kind_name!r}")
        sigma = val_raw.get("sigma")
        try:
            model = ValuationModel(_MODEL_KINDS[kind_name],
                                   None if sigma is None else number(sigma, "valuation.sigma"))
        except Exception as exc:
            raise ConfigError("valuation.sigma", str(exc)) from exc

        proposer = dict(raw.get("proposer", {"kind": "truthful"}))
        chooser = dict(raw.get("chooser", {"kind": "rational"}))
        try:
            build_proposer(proposer)
        except Exception as exc:
            raise ConfigError("proposer", str(exc)) from exc
        try:
            build_chooser(chooser)
        except Exception as exc:
            raise ConfigError("chooser", str(exc)) from exc

        replications = raw.get("replications", 1)
        if isinstance(replications, bool) or not isinstance(replications, int) or replications < 1:
            raise ConfigError("replications", f"must be an integer >= 1, got {replications!r}")
        seed = raw.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ConfigError("seed", f"must be an integer, got {seed!r}")
        series_length = raw.get("series_length", 1)
        if isinstance(series_length, bool) or not isinstance(series_length, int) or series_length < 1:
            raise ConfigError("series_length", f"must be an integer >= 1, got {series_length!r}")

        strengths = raw.get("rankings")
        if strengths is not None:
            if not isinstance(strengths, Mapping):
                raise ConfigError("rankings", "expected a mapping of team label to strength")
            for team in teams:
                if team not in strengths:
                    raise ConfigError("rankings", f"missing rating for team {team!r}")
            strengths = {str(k): number(v, f"rankings.{k}") for k, v in strengths.items()}
        home = raw.get("home")
        if home is not None and home not in teams:
            raise ConfigError("home", f"home team {home!r} is not playing")
        if mech_name == "weaker_decides" and strengths is None and home is None:
            raise ConfigError("rankings", "weaker_decides needs rankings or a home team")

        return cls(
            conditions=conditions,
            model=model,
            mechanism=_MECHANISMS[mech_name],
            team_a=str(teams[0]),
            team_b=str(teams[1]),
            proposer=proposer,
            chooser=chooser,
            replications=replications,
            seed=seed,
            series_length=series_length,
            strengths=dict(strengths) if strengths is not None else None,
            home=home,
            envy_tolerance_runs=number(raw.get("envy_tolerance_runs", 0.5), "envy_tolerance_runs"),
        )

    @classmethod
    def from_file(cls, path: str) -> "ScenarioConfig":
        try:
            with open(path, "r", encoding="utf-8") as handle:
                raw = json.load(handle)
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON in {path}: {exc}") from exc
        return cls.from_dict(raw)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "teams": [self.team_a, self.team_b],
            "mechanism": self.mechanism.value,
            "conditions": self.conditions.to_dict(),
            "valuation": {
                "kind": self.model.kind.value,
                "sigma": self.model.sigma,
                "noise_sd": self.conditions.advantage_noise_sd,
            },
            "proposer": dict(self.proposer),
            "chooser": dict(self.chooser),
            "replications": self.replications,
            "seed": self.seed,
            "series_length": self.series_length,
            "envy_tolerance_runs": self.envy_tolerance_runs,
        }
        if self.strengths is not None:
            out["rankings"] = dict(self.strengths)
        if self.home is not None:
            out["home"] = self.home
        return out

    def with_overrides(self, **changes: Any) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class MetricValue:
    value: float
    stderr: float
    n: int

    def to_dict(self) -> dict[str, Any]:
        return {"value": self.value, "stderr": self.stderr, "n": self.n}


@dataclass(frozen=True)
class ExperimentReport:
    mechanism: str
    replications: int
    seed: int
    draws: int
    metrics: dict[str, MetricValue]

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": "experiment",
            "mechanism": self.mechanism,
            "replications": self.replications,
            "seed": self.seed,
            "draws": self.draws,
            "metrics": {name: m.to_dict() for name, m in sorted(self.metrics.items())},
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ExperimentReport":
        return cls(
            mechanism=raw["mechanism"],
            replications=raw["replications"],
            seed=raw["seed"],
            draws=raw["draws"],
            metrics={
                name: MetricValue(value=m["value"], stderr=m["stderr"], n=m["n"])
                for name, m in raw["metrics"].items()
            },
        )


@dataclass(frozen=True)
class ComparisonTable:
    """Per-mechanism reports run under identical conditions and seed."""

    shared: dict[str, Any]
    reports: tuple[ExperimentReport, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": "comparison",
            "shared": self.shared,
            "reports": [r.to_dict() for r in self.reports],
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ComparisonTable":
        return cls(
            shared=dict(raw["shared"]),
            reports=tuple(ExperimentReport.from_dict(r) for r in raw["reports"]),
        )

    def metric(self, mechanism: str, name: str) -> MetricValue:
        for report in self.reports:
            if report.mechanism == mechanism:
                return report.metrics[name]
        raise KeyError(f"no report for mechanism {mechanism!r}")


# ---------------------------------------------------------------------------
# Replication engine
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class _Row:
    """Per-replication mechanism outcome, before the match is decided."""

    toss_code: int  # 1 = team_a won the toss, 0 = team_b, -1 = no toss
    first_is_a: bool
    bonus_a: float
    bonus_b: float
    bonus_runs: float
    envy_any: bool
    proposer_gap: float  # nan when the mechanism has no proposer
    regret: float  # nan outside auctions
    tie: bool


@dataclass
class ReplicationBatch:
    """Column arrays of per-replication rows plus the shared score draws."""

    toss_code: np.ndarray
    first_is_a: np.ndarray
    bonus_a: np.ndarray
    bonus_b: np.ndarray
    bonus_runs: np.ndarray
    envy_any: np.ndarray
    proposer_gap: np.ndarray
    regret: np.ndarray
    tie: np.ndarray
    score_a: np.ndarray
    score_b: np.ndarray

    @property
    def n(self) -> int:
        return len(self.toss_code)

    def permuted(self, order: np.ndarray) -> "ReplicationBatch":
        return ReplicationBatch(**{
            f.name: getattr(self, f.name)[order] for f in dataclasses.fields(self)
        })


def _envy_tolerance_utility(model: ValuationModel, tolerance_runs: float) -> float:
    """Utility gap equivalent to the run tolerance: gaps no larger than what
    rounding to whole runs can cause are not counted as envy."""
    return win_probability(tolerance_runs, model) - win_probability(-tolerance_runs, model)


def _select_rows(rows: dict[int, _Row], bits: np.ndarray, scores: np.ndarray) -> ReplicationBatch:
    """Vector-select between two precomputed outcomes by coin bit."""
    pick0 = bits == 0
    r0, r1 = rows[0], rows[1]

    def col(name: str, dtype: Any) -> np.ndarray:
        return np.where(pick0, getattr(r0, name), getattr(r1, name)).astype(dtype)

    return ReplicationBatch(
        toss_code=col("toss_code", np.int8),
        first_is_a=col("first_is_a", bool),
        bonus_a=col("bonus_a", float),
        bonus_b=col("bonus_b", float),
        bonus_runs=col("bonus_runs", float),
        envy_any=col("envy_any", bool),
        proposer_gap=col("proposer_gap", float),
        regret=col("regret", float),
        tie=col("tie", bool),
        score_a=scores[:, 0].copy(),
        score_b=scores[:, 1].copy(),
    )


def _stack_rows(rows: Sequence[_Row], scores: np.ndarray) -> ReplicationBatch:
    return ReplicationBatch(
        toss_code=np.array([r.toss_code for r in rows], dtype=np.int8),
        first_is_a=np.array([r.first_is_a for r in rows], dtype=bool),
        bonus_a=np.array([r.bonus_a for r in rows], dtype=float),
        bonus_b=np.array([r.bonus_b for r in rows], dtype=float),
        bonus_runs=np.array([r.bonus_runs for r in rows], dtype=float),
        envy_any=np.array([r.envy_any for r in rows], dtype=bool),
        proposer_gap=np.array([r.proposer_gap for r in rows], dtype=float),
        regret=np.array([r.regret for r in rows], dtype=float),
        tie=np.array([r.tie for r in rows], dtype=bool),
        score_a=scores[:, 0].copy(),
        score_b=scores[:, 1].copy(),
    )


class _RowMaker:
    """Builds per-replication rows for one configured mechanism."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.team_a = config.team_a
        self.team_b = config.team_b
        self.tol_utility = _envy_tolerance_utility(config.model, config.envy_tolerance_runs)
        if config.mechanism is MechanismKind.TPC:
            self.proposer = build_proposer(config.proposer)
            self.chooser = build_chooser(config.chooser)

    def _envy_fields(
        self,
        allocation: Allocation,
        view_a: ValuationView,
        view_b: ValuationView,
        has_proposer: bool,
    ) -> tuple[bool, float]:
        other_view = view_a if allocation.other == self.team_a else view_b
        chooser_view = view_a if allocation.chooser == self.team_a else view_b
        report = check_envy_free(allocation, other_view, chooser_view, self.tol_utility)
        return report.any_envy, (report.proposer_gap if has_proposer else math.nan)

    def _from_allocation(
        self,
        allocation: Allocation,
        view_a: ValuationView,
        view_b: ValuationView,
        toss_code: int,
        has_proposer: bool = False,
        regret: float = math.nan,
        tie: bool = False,
    ) -> _Row:
        envy_any, gap = self._envy_fields(allocation, view_a, view_b, has_proposer)
        return _Row(
            toss_code=toss_code,
            first_is_a=allocation.first_batter == self.team_a,
            bonus_a=allocation.bonus_for(self.team_a),
            bonus_b=allocation.bonus_for(self.team_b),
            bonus_runs=allocation.bonus_runs,
            envy_any=envy_any,
            proposer_gap=gap,
            regret=regret,
            tie=tie,
        )

    def tpc(self, view_a: ValuationView, view_b: ValuationView, bit: int) -> _Row:
        out = execute_tpc_from_draws(
            self.team_a, self.team_b, self.proposer, self.chooser, view_a, view_b, bit
        )
        return self._from_allocation(
            out.allocation, view_a, view_b,
            toss_code=1 if out.toss.lucky == self.team_a else 0,
            has_proposer=True,
        )

    def plain(self, view_a: ValuationView, view_b: ValuationView, bit: int) -> _Row:
        out = plain_toss_from_bit(self.team_a, self.team_b, view_a, view_b, bit)
        assert out.toss is not None
        return self._from_allocation(
            out.allocation, view_a, view_b,
            toss_code=1 if out.toss.lucky == self.team_a else 0,
        )

    def auction(self, view_a: ValuationView, view_b: ValuationView, tie_bit: int) -> _Row:
        out: AuctionOutcome = auction_from_draws(self.team_a, self.team_b, view_a, view_b, tie_bit)
        taken_turn = out.allocation.chosen.turn
        a = self.config.conditions.true_advantage
        realized = a if taken_turn is Turn.BAT_FIRST else -a
        return self._from_allocation(
            out.allocation, view_a, view_b,
            toss_code=-1,
            regret=out.allocation.bonus_runs - realized,
            tie=out.tie_broken_by_coin,
        )

    def weaker(self, view_a: ValuationView, view_b: ValuationView) -> _Row:
        if self.config.strengths is None and self.config.home is None:
            raise ConfigError("rankings", "weaker_decides needs rankings or a home team")
        out: BaselineOutcome = weaker_decides(
            self.team_a, self.team_b, self.config.strengths or {}, self.config.home, view_a, view_b
        )
        return self._from_allocation(out.allocation, view_a, view_b, toss_code=-1)

    def alternation_step(
        self, series: SeriesState, view_a: ValuationView, view_b: ValuationView, bit: int
    ) -> tuple[_Row, SeriesState]:
        out, advanced = alternation_from_draws(
            self.team_a, self.team_b, series, view_a, view_b, bit
        )
        code = -1 if out.toss is None else (1 if out.toss.lucky == self.team_a else 0)
        return self._from_allocation(out.allocation, view_a, view_b, toss_code=code), advanced


def simulate_replications(config: ScenarioConfig) -> ReplicationBatch:
    """Run the configured mechanism across all replications and collect the
    per-replication rows; match scores are drawn but not yet compared."""
    n = config.replications
    cond = config.conditions
    toss_bits = substream(config.seed, "toss").integers(0, 2, n)
    scores = substream(config.seed, "match").normal(cond.score_mean, cond.score_sd, (n, 2))
    noisy = cond.advantage_noise_sd > 0
    noise = substream(config.seed, "views").standard_normal((n, 2)) if noisy else None

    maker = _RowMaker(config)
    base_a = ValuationView(config.team_a, cond.true_advantage, config.model)
    base_b = ValuationView(config.team_b, cond.true_advantage, config.model)

    def views(i: int) -> tuple[ValuationView, ValuationView]:
        if noise is None:
            return base_a, base_b
        return (
            ValuationView(config.team_a, perceive_advantage(cond, float(noise[i, 0])), config.model),
            ValuationView(config.team_b, perceive_advantage(cond, float(noise[i, 1])), config.model),
        )

    kind = config.mechanism
    if kind in (MechanismKind.TPC, MechanismKind.PLAIN_TOSS):
        step = maker.tpc if kind is MechanismKind.TPC else maker.plain
        if not noisy:
            rows_by_bit = {bit: step(base_a, base_b, bit) for bit in (0, 1)}
            return _select_rows(rows_by_bit, toss_bits, scores)
        return _stack_rows([step(*views(i), int(toss_bits[i])) for i in range(n)], scores)

    if kind is MechanismKind.AUCTION:
        tie_bits = substream(config.seed, "tie").integers(0, 2, n)
        if not noisy:
            rows_by_bit = {bit: maker.auction(base_a, base_b, bit) for bit in (0, 1)}
            return _select_rows(rows_by_bit, tie_bits, scores)
        return _stack_rows([maker.auction(*views(i), int(tie_bits[i])) for i in range(n)], scores)

    if kind is MechanismKind.WEAKER_DECIDES:
        if not noisy:
            row = maker.weaker(base_a, base_b)
            return _stack_rows([row] * n, scores)
        return _stack_rows([maker.weaker(*views(i)) for i in range(n)], scores)

    # Alternation: sequential by definition; a fresh series starts every
    # series_length matches.
    rows: list[_Row] = []
    series = SeriesState()
    for i in range(n):
        if i % config.series_length == 0:
            series = SeriesState()
        row, series = maker.alternation_step(series, *views(i), int(toss_bits[i]))
        rows.append(row)
    return _stack_rows(rows, scores)


def _binomial(mask: np.ndarray) -> MetricValue:
    n = int(mask.size)
    if n == 0:
        return MetricValue(value=math.nan, stderr=math.nan, n=0)
    p = float(np.mean(mask))
    return MetricValue(value=p, stderr=math.sqrt(p * (1.0 - p) / n), n=n)


def _sample_mean(values: np.ndarray) -> MetricValue:
    n = int(values.size)
    if n == 0:
        return MetricValue(value=math.nan, stderr=math.nan, n=0)
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return MetricValue(value=mean, stderr=stderr, n=n)


def aggregate_replications(batch: ReplicationBatch, config: ScenarioConfig) -> ExperimentReport:
    """Decide every match and aggregate the fairness metrics.  A symmetric
    function of the rows: any row permutation yields the identical report."""
    a = config.conditions.true_advantage
    adj_a = batch.score_a + np.where(batch.first_is_a, a, 0.0) + batch.bonus_a
    adj_b = batch.score_b + np.where(batch.first_is_a, 0.0, a) + batch.bonus_b
    win_a = adj_a > adj_b
    drawn = adj_a == adj_b
    win_b = ~win_a & ~drawn
    decided = ~drawn

    metrics: dict[str, MetricValue] = {}
    chase_win = (win_a & ~batch.first_is_a) | (win_b & batch.first_is_a)
    metrics["chase_win_rate"] = _binomial(chase_win[decided])
    metrics["envy_rate"] = _binomial(batch.envy_any)
    metrics["mean_bonus"] = _sample_mean(batch.bonus_runs)

    tossed = batch.toss_code >= 0
    mask = decided & tossed
    if mask.any():
        tw_win = np.where(batch.toss_code[mask] == 1, win_a[mask], win_b[mask])
        tw = _binomial(tw_win)
        metrics["toss_winner_win_rate"] = tw
        metrics["winprob_gap"] = MetricValue(
            value=abs(tw.value - (1.0 - tw.value)), stderr=2.0 * tw.stderr, n=tw.n
        )

    gaps = batch.proposer_gap[np.isfinite(batch.proposer_gap)]
    if gaps.size:
        metrics["proposer_gap_max_abs"] = MetricValue(
            value=float(np.max(np.abs(gaps))), stderr=0.0, n=int(gaps.size)
        )
    regrets = batch.regret[np.isfinite(batch.regret)]
    if regrets.size:
        metrics["mean_winner_regret"] = _sample_mean(regrets)
        metrics["auction_tie_rate"] = _binomial(batch.tie)

    return ExperimentReport(
        mechanism=config.mechanism.value,
        replications=config.replications,
        seed=config.seed,
        draws=int(drawn.sum()),
        metrics=metrics,
    )


def run_experiment(config: ScenarioConfig) -> ExperimentReport:
    """Replications of protocol + match under per-purpose substreams of the
    config seed; identical configs produce byte-identical reports."""
    return aggregate_replications(simulate_replications(config), config)


def compare_mechanisms(configs: Sequence[ScenarioConfig]) -> ComparisonTable:
    """Run several mechanism configs that share conditions, teams, seed, and
    replication count, so results differ only by mechanism (common random
    numbers)."""
    if len(configs) < 2:
        raise ComparisonInvalidError("need at least two configs to compare")
    head = configs[0]
    for other in configs[1:]:
        for attr in ("conditions", "model", "team_a", "team_b", "seed", "replications"):
            if getattr(other, attr) != getattr(head, attr):
                raise ComparisonInvalidError(
                    f"configs disagree on {attr}; mechanisms must share the scenario"
                )
    reports = tuple(run_experiment(c) for c in configs)
    shared = {
        "teams": [head.team_a, head.team_b],
        "conditions": head.conditions.to_dict(),
        "valuation": {"kind": head.model.kind.value, "sigma": head.model.sigma},
        "replications": head.replications,
        "seed": head.seed,
    }
    return ComparisonTable(shared=shared, reports=reports)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def _csv_rows(obj: ExperimentReport | ComparisonTable) -> Iterator[tuple[str, str, str, str, str]]:
    reports = obj.reports if isinstance(obj, ComparisonTable) else (obj,)
    for report in reports:
        for name, metric in sorted(report.metrics.items()):
            yield (report.mechanism, name, repr(metric.value), repr(metric.stderr), str(metric.n))


def write_report(
    report: ExperimentReport | ComparisonTable,
    path: str,
    format: str = "json",
) -> None:
    """Persist a report with canonical key ordering; the write is atomic
    (temp file + rename), so a failure leaves no partial file behind."""
    if format == "json":
        payload = json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
    elif format == "csv":
        lines = ["mechanism,metric,value,stderr,n"]
        lines += [",".join(row) for row in _csv_rows(report)]
        payload = "\n".join(lines) + "\n"
    else:
        raise ReportIOError(f"unknown report format {format!r} for {path}")

    directory = os.path.dirname(os.path.abspath(path))
    tmp_path = None
    try:
        fd, tmp_path = tempfile.mkstemp(prefix=".report-", dir=directory)
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(payload)
        os.replace(tmp_path, path)
        tmp_path = None
    except OSError as exc:
        raise ReportIOError(f"cannot write report to {path}: {exc}") from exc
    finally:
        if tmp_path is not None and os.path.exists(tmp_path):
            os.unlink(tmp_path)


def read_report(path: str) -> ExperimentReport | ComparisonTable:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ReportIOError(f"cannot read report from {path}: {exc}") from exc
    if raw.get("kind") == "comparison":
        return ComparisonTable.from_dict(raw)
    return ExperimentReport.from_dict(raw)
