import numpy as np
import pytest

from fairtoss.baselines import (
    Bid,
    SeriesState,
    alternation,
    alternation_from_draws,
    auction,
    auction_from_draws,
    plain_toss,
    plain_toss_from_bit,
    weaker_decides,
)
from fairtoss.errors import InvalidParametersError, UndecidableMechanismError
from fairtoss.mechanism import Turn
from fairtoss.streams import substream

from conftest import view


def _views(a_hat_a, a_hat_b=None):
    return view(a_hat_a, team="AUS"), view(a_hat_b if a_hat_b is not None else a_hat_a, team="NZL")


# ---------------------------------------------------------------------------
# plain toss
# ---------------------------------------------------------------------------


def test_plain_toss_winner_takes_advantage_no_bonus():
    va, vb = _views(-50.0)
    out = plain_toss_from_bit("AUS", "NZL", va, vb, 0)
    assert out.toss.lucky == "AUS"
    assert out.allocation.chooser == "AUS"
    assert out.allocation.chosen.turn is Turn.BOWL_FIRST
    assert out.allocation.bonus_runs == 0.0
    assert out.allocation.bonus_recipient is None


def test_plain_toss_indifferent_winner_bats_first():
    va, vb = _views(0.0)
    out = plain_toss_from_bit("AUS", "NZL", va, vb, 1)
    assert out.allocation.chooser == "NZL"
    assert out.allocation.chosen.turn is Turn.BAT_FIRST


def test_plain_toss_seeded_wrapper_matches_bit_variant():
    va, vb = _views(-50.0)
    for seed in range(20):
        rng = substream(seed, "toss")
        bit = int(substream(seed, "toss").integers(0, 2))
        assert plain_toss("AUS", "NZL", va, vb, rng) == plain_toss_from_bit("AUS", "NZL", va, vb, bit)


def test_plain_toss_ex_ante_symmetry():
    va, vb = _views(-50.0)
    bits = substream(777, "toss").integers(0, 2, 50_000)
    lucky_a = np.mean(bits == 0)
    # Each team takes the advantaged turn exactly when it wins the toss.
    assert abs(lucky_a - 0.5) < 3 * np.sqrt(0.25 / 50_000) + 1e-12


# ---------------------------------------------------------------------------
# alternation
# ---------------------------------------------------------------------------


def test_alternation_flips_first_batter():
    va, vb = _views(-50.0)
    series = SeriesState().next_after("AUS")
    out, advanced = alternation_from_draws("AUS", "NZL", series, va, vb, 0)
    assert out.allocation.first_batter == "NZL"
    assert out.toss is None
    assert advanced.last_first_batter == "NZL"
    assert advanced.match_index == 3


def test_alternation_five_match_series_balance():
    va, vb = _views(-50.0)
    series = SeriesState()
    first_batters = []
    rng = substream(3, "toss")
    for _ in range(5):
        out, series = alternation("AUS", "NZL", series, va, vb, rng)
        first_batters.append(out.allocation.first_batter)
    assert first_batters.count("AUS") >= 2
    assert first_batters.count("NZL") >= 2
    for prev, nxt in zip(first_batters, first_batters[1:]):
        assert prev != nxt


def test_alternation_even_series_exact_balance():
    va, vb = _views(-20.0)
    for k in (1, 3, 6):
        series = SeriesState()
        rng = substream(k, "toss")
        first_batters = []
        for _ in range(2 * k):
            out, series = alternation("AUS", "NZL", series, va, vb, rng)
            first_batters.append(out.allocation.first_batter)
        assert first_batters.count("AUS") == k
        assert first_batters.count("NZL") == k


def test_single_match_series_reduces_to_plain_toss():
    va, vb = _views(-50.0)
    for bit in (0, 1):
        alt, _ = alternation_from_draws("AUS", "NZL", SeriesState(), va, vb, bit)
        plain = plain_toss_from_bit("AUS", "NZL", va, vb, bit)
        assert alt.allocation == plain.allocation
        assert alt.toss == plain.toss


# ---------------------------------------------------------------------------
# weaker decides
# ---------------------------------------------------------------------------


def test_weaker_team_decides():
    va, vb = _views(-50.0)
    out = weaker_decides("AUS", "NZL", {"AUS": 2.0, "NZL": 1.0}, None, va, vb)
    assert out.allocation.chooser == "NZL"
    assert out.allocation.chosen.turn is Turn.BOWL_FIRST
    assert out.allocation.bonus_runs == 0.0


def test_equal_ranks_neutral_ground_undecidable():
    va, vb = _views(-50.0)
    with pytest.raises(UndecidableMechanismError):
        weaker_decides("AUS", "NZL", {"AUS": 1.0, "NZL": 1.0}, None, va, vb)


def test_equal_ranks_touring_team_decides():
    va, vb = _views(-50.0)
    out = weaker_decides("AUS", "NZL", {"AUS": 1.0, "NZL": 1.0}, "AUS", va, vb)
    assert out.allocation.chooser == "NZL"


def test_weaker_decides_requires_ratings_and_valid_home():
    va, vb = _views(0.0)
    with pytest.raises(InvalidParametersError):
        weaker_decides("AUS", "NZL", {"AUS": 1.0}, None, va, vb)
    with pytest.raises(InvalidParametersError):
        weaker_decides("AUS", "NZL", {"AUS": 1.0, "NZL": 2.0}, "ENG", va, vb)


# ---------------------------------------------------------------------------
# auction
# ---------------------------------------------------------------------------


def test_auction_higher_bidder_wins_and_concedes_bid():
    va, vb = _views(-50.0, -30.0)
    out = auction_from_draws("AUS", "NZL", va, vb, 0)
    assert out.bids == (Bid("AUS", 50.0), Bid("NZL", 30.0))
    assert not out.tie_broken_by_coin
    allocation = out.allocation
    assert allocation.chooser == "AUS"
    assert allocation.chosen.turn is Turn.BOWL_FIRST
    assert allocation.bonus_recipient == "NZL"
    assert allocation.bonus_runs == 50.0


def test_auction_tie_broken_by_coin():
    va, vb = _views(-40.0, 40.0)
    heads = auction_from_draws("AUS", "NZL", va, vb, 0)
    tails = auction_from_draws("AUS", "NZL", va, vb, 1)
    assert heads.tie_broken_by_coin and tails.tie_broken_by_coin
    assert heads.allocation.chooser == "AUS"
    assert tails.allocation.chooser == "NZL"
    # Winners take their own preferred turns.
    assert heads.allocation.chosen.turn is Turn.BOWL_FIRST
    assert tails.allocation.chosen.turn is Turn.BAT_FIRST


def test_auction_bids_rounded_to_integer_runs():
    va, vb = _views(-40.4, 40.5)
    out = auction_from_draws("AUS", "NZL", va, vb, 1)
    assert out.bids[0].bid_runs == 40.0
    assert out.bids[1].bid_runs == 40.0  # ties-to-even rounding reaches the tie
    assert out.tie_broken_by_coin


def test_auction_winners_curse_sign():
    # Noisy estimates of a 50-run advantage: conditional on winning, the
    # winner overbid on average (regret = bid - true advantage > 0).
    rng = substream(17, "views")
    tie_rng = substream(17, "tie")
    true_a = 50.0
    regrets = []
    for _ in range(20_000):
        z = rng.standard_normal(2)
        va = view(true_a + 15.0 * float(np.clip(z[0], -3, 3)), team="AUS")
        vb = view(true_a + 15.0 * float(np.clip(z[1], -3, 3)), team="NZL")
        out = auction("AUS", "NZL", va, vb, tie_rng)
        realized = true_a if out.allocation.chosen.turn is Turn.BAT_FIRST else -true_a
        regrets.append(out.allocation.bonus_runs - realized)
    mean = float(np.mean(regrets))
    se = float(np.std(regrets, ddof=1) / np.sqrt(len(regrets)))
    assert mean > 3 * se
    assert mean > 0


def test_wrapped_auction_matches_bit_variant():
    va, vb = _views(-40.0, 40.0)
    for seed in range(10):
        bit = int(substream(seed, "tie").integers(0, 2))
        assert auction("AUS", "NZL", va, vb, substream(seed, "tie")) == \
            auction_from_draws("AUS", "NZL", va, vb, bit)


def test_every_mechanism_returns_valid_allocation():
    va, vb = _views(-50.0, 30.0)
    outcomes = [
        plain_toss_from_bit("AUS", "NZL", va, vb, 0).allocation,
        alternation_from_draws("AUS", "NZL", SeriesState(), va, vb, 1)[0].allocation,
        weaker_decides("AUS", "NZL", {"AUS": 5.0, "NZL": 3.0}, None, va, vb).allocation,
        auction_from_draws("AUS", "NZL", va, vb, 0).allocation,
    ]
    for allocation in outcomes:
        assert {allocation.chosen.turn, allocation.complement.turn} == {Turn.BAT_FIRST, Turn.BOWL_FIRST}
        assert allocation.chosen.bonus_delta + allocation.complement.bonus_delta == 0.0
        assert {allocation.chooser, allocation.other} == {"AUS", "NZL"}
        if allocation.bonus_runs > 0:
            positive_holder = (
                allocation.chooser if allocation.chosen.bonus_delta > 0 else allocation.other
            )
            assert allocation.bonus_recipient == positive_holder
        else:
            assert allocation.bonus_recipient is None
