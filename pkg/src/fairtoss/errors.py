"""Exception hierarchy shared across the package.

Every domain failure derives from FairTossError so the CLI can map any of
them to exit code 1; usage errors stay with argparse (exit code 2).
"""

from __future__ import annotations


class FairTossError(Exception):
    """Base for all domain errors raised by this package."""


class InvalidMatchError(FairTossError):
    """Two distinct teams are required."""


class InvalidProposalError(FairTossError):
    """Proposal parameters are out of domain (e.g. negative bonus runs)."""


class ProtocolViolationError(FairTossError):
    """Protocol steps were attempted out of order, or a policy returned an
    out-of-domain value."""


class InvalidModelError(FairTossError):
    """Valuation model parameters are invalid."""


class SolverFailureError(FairTossError):
    """The indifference solver could not bracket a root (non-monotone model)."""


class InvalidParametersError(FairTossError):
    """Operation parameters are out of domain (e.g. empty search grid)."""


class UndecidableMechanismError(FairTossError):
    """The mechanism's own rule cannot pick a decider (e.g. equal rankings on
    neutral ground)."""


class ConfigError(FairTossError):
    """Scenario configuration is invalid; carries the offending field path."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ComparisonInvalidError(FairTossError):
    """compare_mechanisms was given configs that do not share conditions."""


class ReportIOError(FairTossError):
    """Report persistence failed; message carries the target path."""
