"""Toss-Propose-Choose: a fair replacement for cricket's coin toss.

The toss still happens, but the loser proposes a bonus-run handicap that
splits the decision into two balanced options and the winner picks one, so
neither captain ends up envying the other's side of the deal.  This package
provides the protocol engine, valuation models and the indifference solver,
strategic agents, baseline mechanisms (plain toss, alternation,
weaker-decides, sealed-bid auction), a Monte Carlo fairness harness, a CLI,
and an HTTP service for conducting live sessions.
"""

from .baselines import (
    AuctionOutcome,
    BaselineOutcome,
    Bid,
    MechanismKind,
    SeriesState,
    alternation,
    auction,
    plain_toss,
    weaker_decides,
)
from .engine import TpcOutcome, execute_tpc
from .errors import (
    ComparisonInvalidError,
    ConfigError,
    FairTossError,
    InvalidMatchError,
    InvalidModelError,
    InvalidParametersError,
    InvalidProposalError,
    ProtocolViolationError,
    ReportIOError,
    SolverFailureError,
    UndecidableMechanismError,
)
from .harness import (
    ComparisonTable,
    ExperimentReport,
    MatchResult,
    MetricValue,
    ScenarioConfig,
    calibrate_chase_advantage,
    compare_mechanisms,
    first_batter_win_probability,
    read_report,
    run_experiment,
    simulate_match,
    write_report,
)
from .mechanism import (
    Allocation,
    EnvyReport,
    OptionBundle,
    Phase,
    Proposal,
    ProtocolRun,
    TossOutcome,
    Turn,
    build_proposal,
    canonical_json,
    check_envy_free,
    replay_transcript,
    run_toss,
)
from .strategies import (
    ChooserBelief,
    HabitualChooser,
    RationalChooser,
    StrategicProposer,
    TruthfulProposer,
    habitual_choose,
    rational_choose,
    strategic_propose,
    truthful_propose,
)
from .streams import substream
from .valuation import (
    DEFAULT_MODEL,
    MatchConditions,
    ModelKind,
    ValuationModel,
    ValuationView,
    advantageous_turn_for,
    effective_advantage,
    indifference_bonus,
    utility,
    win_probability,
)

__version__ = "0.1.0"
