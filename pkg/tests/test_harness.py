import json
import math

import numpy as np
import pytest

from fairtoss.baselines import MechanismKind
from fairtoss.engine import execute_tpc_from_draws
from fairtoss.errors import ComparisonInvalidError, ConfigError, ReportIOError
from fairtoss.harness import (
    ScenarioConfig,
    aggregate_replications,
    calibrate_chase_advantage,
    compare_mechanisms,
    first_batter_win_probability,
    match_from_scores,
    read_report,
    run_experiment,
    simulate_match,
    simulate_replications,
    write_report,
)
from fairtoss.mechanism import OptionBundle, Turn, make_allocation
from fairtoss.strategies import RationalChooser, TruthfulProposer
from fairtoss.streams import substream
from fairtoss.valuation import MatchConditions

from conftest import LOGISTIC_30, phi_ref


def _allocation(first="AUS", bonus_to=None, bonus=0.0):
    chosen_turn = Turn.BAT_FIRST if first == "AUS" else Turn.BOWL_FIRST
    delta = 0.0
    if bonus_to is not None:
        delta = bonus if bonus_to == "AUS" else -bonus
    return make_allocation("AUS", "NZL", OptionBundle(chosen_turn, delta),
                           OptionBundle(chosen_turn.other, -delta))


def _config(**overrides):
    base = dict(
        conditions=MatchConditions(true_advantage=50.0),
        model=LOGISTIC_30,
        mechanism=MechanismKind.TPC,
        replications=2000,
        seed=11,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


# ---------------------------------------------------------------------------
# simulate_match
# ---------------------------------------------------------------------------


def test_simulate_match_symmetric_when_balanced():
    conditions = MatchConditions(true_advantage=0.0, score_sd=30.0)
    allocation = _allocation()
    rng = substream(1, "match")
    wins = sum(
        1 for _ in range(40_000)
        if simulate_match(allocation, conditions, rng).winner == "AUS"
    )
    p = wins / 40_000
    assert abs(p - 0.5) <= 3 * math.sqrt(0.25 / 40_000)


def test_simulate_match_bonus_cancels_advantage():
    conditions = MatchConditions(true_advantage=50.0, score_sd=40.0)
    allocation = _allocation(first="AUS", bonus_to="NZL", bonus=50.0)
    rng = substream(2, "match")
    wins = sum(
        1 for _ in range(40_000)
        if simulate_match(allocation, conditions, rng).winner == "AUS"
    )
    p = wins / 40_000
    assert abs(p - 0.5) <= 3 * math.sqrt(0.25 / 40_000)


def test_simulate_match_matches_analytic_oracle():
    # First-batter win rate = Phi(50 / (40 * sqrt(2))) ~ 0.8116.
    conditions = MatchConditions(true_advantage=50.0, score_sd=40.0)
    expected = phi_ref(50.0 / (40.0 * math.sqrt(2.0)))
    assert expected == pytest.approx(0.8116204410942089, abs=1e-12)
    rng = substream(3, "match")
    n = 40_000
    wins = sum(
        1 for _ in range(n)
        if simulate_match(_allocation(), conditions, rng).winner == "AUS"
    )
    p = wins / n
    assert abs(p - expected) <= 3 * math.sqrt(expected * (1 - expected) / n)


@pytest.mark.parametrize(
    "a,bonus_first,bonus_second,score_sd",
    [(0.0, 0.0, 0.0, 30.0), (50.0, 0.0, 50.0, 30.0), (50.0, 0.0, 0.0, 40.0),
     (-60.0, 0.0, 0.0, 30.0), (20.0, 10.0, 0.0, 60.0)],
)
def test_normal_oracle_agreement_grid(a, bonus_first, bonus_second, score_sd):
    conditions = MatchConditions(true_advantage=a, score_sd=score_sd)
    expected = phi_ref((a + bonus_first - bonus_second) / (score_sd * math.sqrt(2.0)))
    assert first_batter_win_probability(conditions, bonus_first, bonus_second) == \
        pytest.approx(expected, abs=1e-12)
    recipient = "AUS" if bonus_first else ("NZL" if bonus_second else None)
    allocation = _allocation(first="AUS", bonus_to=recipient,
                             bonus=bonus_first or bonus_second)
    rng = substream(4, "match")
    n = 20_000
    wins = draws = 0
    for _ in range(n):
        result = simulate_match(allocation, conditions, rng)
        wins += result.winner == "AUS"
        draws += result.drawn
    assert draws == 0  # continuous scores: ties have measure zero
    p = wins / n
    assert abs(p - expected) <= 3 * math.sqrt(max(expected * (1 - expected), 1e-4) / n)


def test_match_from_scores_exact_tie_is_draw():
    conditions = MatchConditions(true_advantage=0.0)
    result = match_from_scores(_allocation(), conditions, {"AUS": 100.0, "NZL": 100.0})
    assert result.drawn and result.winner is None and result.margin == 0.0


def test_match_result_records_bonus_and_toss():
    conditions = MatchConditions(true_advantage=0.0)
    allocation = _allocation(first="AUS", bonus_to="NZL", bonus=10.0)
    result = match_from_scores(allocation, conditions, {"AUS": 100.0, "NZL": 95.0},
                               toss_winner="AUS")
    assert result.bonus_applied == ("NZL", 10.0)
    assert result.toss_winner == "AUS"
    assert result.winner == "NZL"  # 95 + 10 > 100
    assert result.margin == pytest.approx(5.0)
    assert result.first_batter == "AUS"


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------


def test_calibrate_chase_advantage_hits_target():
    for sd in (30.0, 60.0):
        a = calibrate_chase_advantage(0.92, sd)
        assert a < 0
        conditions = MatchConditions(true_advantage=a, score_sd=sd)
        chase_rate = 1.0 - first_batter_win_probability(conditions)
        assert chase_rate == pytest.approx(0.92, abs=1e-9)
    with pytest.raises(ConfigError):
        calibrate_chase_advantage(1.2, 30.0)


# ---------------------------------------------------------------------------
# run_experiment
# ---------------------------------------------------------------------------


def test_run_experiment_reproducible_byte_identical():
    config = _config(replications=5000)
    first = run_experiment(config)
    second = run_experiment(config)
    assert first == second
    assert json.dumps(first.to_dict(), sort_keys=True) == json.dumps(second.to_dict(), sort_keys=True)


def test_run_experiment_seed_changes_outcome():
    report_a = run_experiment(_config(replications=5000, seed=1))
    report_b = run_experiment(_config(replications=5000, seed=2))
    assert report_a != report_b


def test_single_replication_equals_one_transcript():
    config = _config(replications=1, seed=123)
    report = run_experiment(config)
    # Assemble the same single replication by hand from the same substreams.
    bit = int(substream(123, "toss").integers(0, 2, 1)[0])
    out = execute_tpc_from_draws("AUS", "NZL", TruthfulProposer(), RationalChooser(),
                                 *_views_const(config), bit)
    scores = substream(123, "match").normal(160.0, 30.0, (1, 2))
    result = match_from_scores(out.allocation, config.conditions,
                               {"AUS": scores[0, 0], "NZL": scores[0, 1]},
                               toss_winner=out.toss.lucky)
    assert report.metrics["mean_bonus"].value == out.allocation.bonus_runs
    tw = report.metrics["toss_winner_win_rate"]
    assert tw.n == 1
    assert tw.value == float(result.winner == out.toss.lucky)
    assert report.metrics["envy_rate"].value == float(out.envy().any_envy)


def _views_const(config):
    from fairtoss.valuation import ValuationView

    return (
        ValuationView(config.team_a, config.conditions.true_advantage, config.model),
        ValuationView(config.team_b, config.conditions.true_advantage, config.model),
    )


def test_aggregates_invariant_under_replication_permutation():
    config = _config(replications=4000, mechanism=MechanismKind.PLAIN_TOSS)
    batch = simulate_replications(config)
    report = aggregate_replications(batch, config)
    order = np.random.default_rng(0).permutation(batch.n)
    shuffled = aggregate_replications(batch.permuted(order), config)
    assert shuffled == report


def test_noise_free_fast_path_matches_noisy_code_path():
    # Memoized-by-coin and per-replication loops must agree exactly; run the
    # loop path by setting an infinitesimal noise floor is not possible, so
    # compare TPC noise-free against manually folded per-rep executions.
    config = _config(replications=64, seed=9)
    batch = simulate_replications(config)
    bits = substream(9, "toss").integers(0, 2, 64)
    va, vb = _views_const(config)
    for i in range(64):
        out = execute_tpc_from_draws("AUS", "NZL", TruthfulProposer(), RationalChooser(),
                                     va, vb, int(bits[i]))
        assert batch.first_is_a[i] == (out.allocation.first_batter == "AUS")
        assert batch.bonus_runs[i] == out.allocation.bonus_runs
        assert batch.toss_code[i] == (1 if out.toss.lucky == "AUS" else 0)


def test_alternation_experiment_alternates():
    config = _config(mechanism=MechanismKind.ALTERNATION, replications=10,
                     series_length=5, seed=3)
    batch = simulate_replications(config)
    for i in range(10):
        if i % 5 != 0:
            assert batch.first_is_a[i] != batch.first_is_a[i - 1]
        assert batch.bonus_runs[i] == 0.0


def test_experiment_envy_rates():
    # Plain toss with a real advantage leaves the loser envious every time;
    # truthful TPC never does.
    plain = run_experiment(_config(mechanism=MechanismKind.PLAIN_TOSS, replications=500))
    tpc = run_experiment(_config(mechanism=MechanismKind.TPC, replications=500))
    assert plain.metrics["envy_rate"].value == 1.0
    assert tpc.metrics["envy_rate"].value == 0.0
    assert tpc.metrics["proposer_gap_max_abs"].value <= 1e-6


def test_weaker_decides_experiment():
    config = _config(mechanism=MechanismKind.WEAKER_DECIDES, replications=100,
                     strengths={"AUS": 2.0, "NZL": 1.0})
    report = run_experiment(config)
    assert "toss_winner_win_rate" not in report.metrics
    assert report.metrics["mean_bonus"].value == 0.0


def test_weaker_decides_requires_rankings():
    config = _config(mechanism=MechanismKind.WEAKER_DECIDES, replications=10)
    with pytest.raises(ConfigError) as err:
        run_experiment(config)
    assert "rankings" in str(err.value)


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


VALID_RAW = {
    "teams": ["AUS", "NZL"],
    "mechanism": "tpc",
    "conditions": {"true_advantage": -50.0, "score_mean": 160.0, "score_sd": 30.0},
    "valuation": {"kind": "logistic", "sigma": 30.0, "noise_sd": 0.0},
    "proposer": {"kind": "truthful"},
    "chooser": {"kind": "rational"},
    "replications": 100,
    "seed": 7,
}


def test_config_from_dict_roundtrip(tmp_path):
    config = ScenarioConfig.from_dict(VALID_RAW)
    assert config.conditions.true_advantage == -50.0
    assert config.model.sigma == 30.0
    again = ScenarioConfig.from_dict(config.to_dict())
    assert again == config
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(VALID_RAW))
    assert ScenarioConfig.from_file(str(path)) == config


@pytest.mark.parametrize(
    "mutate,field",
    [
        (lambda d: d.pop("conditions"), "conditions"),
        (lambda d: d["conditions"].pop("true_advantage"), "conditions.true_advantage"),
        (lambda d: d["conditions"].__setitem__("score_sd", -1), "conditions.score_sd"),
        (lambda d: d.__setitem__("mechanism", "dice"), "mechanism"),
        (lambda d: d["valuation"].__setitem__("kind", "cubic"), "valuation.kind"),
        (lambda d: d["valuation"].__setitem__("sigma", -3), "valuation.sigma"),
        (lambda d: d["valuation"].__setitem__("noise_sd", -1), "valuation.noise_sd"),
        (lambda d: d.__setitem__("replications", 0), "replications"),
        (lambda d: d.__setitem__("seed", "lucky"), "seed"),
        (lambda d: d.__setitem__("teams", ["AUS", "AUS"]), "teams"),
        (lambda d: d.__setitem__("proposer", {"kind": "psychic"}), "proposer"),
        (lambda d: d.__setitem__("chooser", {"kind": "vibes"}), "chooser"),
        (lambda d: d.__setitem__("home", "ENG"), "home"),
    ],
)
def test_config_errors_carry_field_path(mutate, field):
    raw = json.loads(json.dumps(VALID_RAW))
    mutate(raw)
    with pytest.raises(ConfigError) as err:
        ScenarioConfig.from_dict(raw)
    assert err.value.field == field


def test_config_noise_conflict_detected():
    raw = json.loads(json.dumps(VALID_RAW))
    raw["conditions"]["advantage_noise_sd"] = 5.0
    raw["valuation"]["noise_sd"] = 10.0
    with pytest.raises(ConfigError) as err:
        ScenarioConfig.from_dict(raw)
    assert "noise" in err.value.field


def test_config_weaker_decides_needs_rankings():
    raw = json.loads(json.dumps(VALID_RAW))
    raw["mechanism"] = "weaker_decides"
    with pytest.raises(ConfigError) as err:
        ScenarioConfig.from_dict(raw)
    assert err.value.field == "rankings"
    raw["rankings"] = {"AUS": 2, "NZL": 1}
    assert ScenarioConfig.from_dict(raw).strengths == {"AUS": 2.0, "NZL": 1.0}


# ---------------------------------------------------------------------------
# compare_mechanisms
# ---------------------------------------------------------------------------


def test_compare_crn_gap_dominance():
    base = _config(replications=20_000)
    table = compare_mechanisms([
        base.with_overrides(mechanism=MechanismKind.PLAIN_TOSS),
        base.with_overrides(mechanism=MechanismKind.TPC),
    ])
    assert table.metric("plain_toss", "winprob_gap").value > table.metric("tpc", "winprob_gap").value


def test_compare_requires_shared_conditions():
    base = _config(replications=10)
    other = _config(replications=10,
                    conditions=MatchConditions(true_advantage=10.0))
    with pytest.raises(ComparisonInvalidError):
        compare_mechanisms([base, other])
    with pytest.raises(ComparisonInvalidError):
        compare_mechanisms([base])
    with pytest.raises(ComparisonInvalidError):
        compare_mechanisms([base, base.with_overrides(seed=99)])


def test_compare_auction_regret_and_tpc_envy():
    cond = MatchConditions(true_advantage=50.0, advantage_noise_sd=15.0)
    base = _config(conditions=cond, replications=20_000, seed=17)
    table = compare_mechanisms([
        base.with_overrides(mechanism=MechanismKind.AUCTION),
        base.with_overrides(mechanism=MechanismKind.TPC),
    ])
    regret = table.metric("auction", "mean_winner_regret")
    assert regret.value > 3 * regret.stderr
    assert table.metric("tpc", "envy_rate").value == 0.0


# ---------------------------------------------------------------------------
# report persistence
# ---------------------------------------------------------------------------


def test_write_report_json_roundtrip(tmp_path):
    report = run_experiment(_config(replications=200))
    path = str(tmp_path / "report.json")
    write_report(report, path, "json")
    assert read_report(path) == report


def test_write_comparison_roundtrip(tmp_path):
    base = _config(replications=200)
    table = compare_mechanisms([
        base.with_overrides(mechanism=MechanismKind.PLAIN_TOSS),
        base.with_overrides(mechanism=MechanismKind.TPC),
    ])
    path = str(tmp_path / "table.json")
    write_report(table, path, "json")
    assert read_report(path) == table


def test_write_report_csv_one_row_per_metric(tmp_path):
    report = run_experiment(_config(replications=200))
    path = str(tmp_path / "report.csv")
    write_report(report, path, "csv")
    lines = open(path).read().strip().splitlines()
    assert lines[0] == "mechanism,metric,value,stderr,n"
    assert len(lines) == 1 + len(report.metrics)
    for line in lines[1:]:
        assert line.split(",")[0] == "tpc"
        assert len(line.split(",")) == 5


def test_write_report_unwritable_path_no_partial_file(tmp_path):
    report = run_experiment(_config(replications=50))
    missing_dir = tmp_path / "nope" / "report.json"
    with pytest.raises(ReportIOError) as err:
        write_report(report, str(missing_dir), "json")
    assert "report.json" in str(err.value)
    assert not missing_dir.exists()
    assert not (tmp_path / "nope").exists()
    # No stray temp files left next to the target either.
    assert list(tmp_path.iterdir()) == []


def test_write_report_canonical_ordering(tmp_path):
    report = run_experiment(_config(replications=50))
    path = str(tmp_path / "report.json")
    write_report(report, path, "json")
    raw = open(path).read()
    parsed = json.loads(raw)
    assert raw == json.dumps(parsed, sort_keys=True, indent=2) + "\n"
