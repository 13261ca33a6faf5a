import enum
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

import numpy as np

__all__ = ["Verdict", "EstimateReport", "error_budget", "worst_verdict"]

#: Default multiplier of the numerical error budget.
BUDGET_CONSTANT = 10.0


class Verdict(enum.IntEnum):
    """Outcome of a check; larger is worse."""

    PASS = 0
    INCONCLUSIVE = 1
    VIOLATED = 2

    def __str__(self) -> str:
        return self.name.lower()


def error_budget(h: float, dt: float, scale: float, c_b: float = BUDGET_CONSTANT) -> float:
    """
    Honesty margin ``c_b (h^2 + dt^2) scale`` for discrete inequality checks.

    :param h: grid spacing
    :param dt: spacing of the snapshots the check differentiates
    :param scale: magnitude of the quantity being bounded
    """
    return c_b * (h * h + dt * dt) * abs(scale)


def worst_verdict(verdicts: Sequence[Verdict]) -> Verdict:
    return max(verdicts, default=Verdict.PASS)


@dataclass(frozen=True)
class EstimateReport:
    """
    Result of one check: the smallest ``RHS - LHS`` over the sampled
    spacetime, where it occurred, and the verdict against the budget.

    :param location: where the worst slack was found, e.g. ``{"t": ..., "x": [...]}``
    :param series: plot-ready columns, written as CSV by the laboratory
    """

    check: str
    slack: float
    location: Mapping[str, Any]
    budget: float
    verdict: Verdict
    series: Mapping[str, np.ndarray] = field(default_factory=dict, compare=False)
    details: Mapping[str, Any] = field(default_factory=dict, compare=False)

    @classmethod
    def from_slack(
        cls,
        check: str,
        slack: float,
        location: Mapping[str, Any],
        budget: float,
        series: Optional[Mapping[str, np.ndarray]] = None,
        details: Optional[Mapping[str, Any]] = None,
    ) -> "EstimateReport":
        slack = float(slack)
        budget = float(budget)
        if np.isnan(slack) or slack < -budget:
            verdict = Verdict.VIOLATED
        elif slack < 0:
            verdict = Verdict.INCONCLUSIVE
        else:
            verdict = Verdict.PASS
        return cls(check, slack, dict(location), budget, verdict, dict(series or {}), dict(details or {}))

    @classmethod
    def from_residual(
        cls,
        check: str,
        residual: float,
        location: Mapping[str, Any],
        tolerance: float,
        series: Optional[Mapping[str, np.ndarray]] = None,
        details: Optional[Mapping[str, Any]] = None,
    ) -> "EstimateReport":
        """
        Report for an identity: the slack is ``tolerance - residual`` and
        there is no inconclusive band.
        """
        details = {"residual": float(residual), "tolerance": float(tolerance), **(details or {})}
        return cls.from_slack(check, tolerance - residual, location, 0.0, series, details)

    @property
    def passed(self) -> bool:
        return self.verdict != Verdict.VIOLATED

    def as_dict(self) -> dict:
        out = {
            "check": self.check,
            "slack": self.slack,
            "location": dict(self.location),
            "budget": self.budget,
            "verdict": str(self.verdict),
        }
        if self.details:
            out["details"] = dict(self.details)
        return out
