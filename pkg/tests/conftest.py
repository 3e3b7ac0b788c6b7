import math

import pytest

from fairtoss.valuation import ModelKind, ValuationModel, ValuationView

LOGISTIC_30 = ValuationModel(ModelKind.LOGISTIC_WIN_PROB, 30.0)
LINEAR = ValuationModel(ModelKind.LINEAR_RUNS)
SCORE_SIM_30 = ValuationModel(ModelKind.SCORE_SIMULATION, 30.0)


def logistic_ref(delta: float, sigma: float) -> float:
    """Independent logistic evaluation for oracle checks."""
    return 1.0 / (1.0 + math.exp(-delta / sigma))


def phi_ref(x: float) -> float:
    """Standard normal CDF via erf, independent of statistics.NormalDist."""
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


@pytest.fixture
def logistic_model() -> ValuationModel:
    return LOGISTIC_30


@pytest.fixture
def linear_model() -> ValuationModel:
    return LINEAR


def view(a_hat: float, model: ValuationModel = LOGISTIC_30, team: str = "NZL") -> ValuationView:
    return ValuationView(team=team, perceived_advantage=a_hat, model=model)
