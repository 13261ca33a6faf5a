"""
The pointwise estimates for a positive heat solution on the flow.
"""

import numpy as np

from grflow.estimates import (
    EstimateReport,
    LiYauParams,
    error_budget,
    hamilton_check,
    harnack_sweep,
    lemma_residual,
    liyau_check,
)
from grflow.flow import CurvatureBounds
from grflow.heat import ScalarEvolution

from ..lab_tunable import feedback, tunable


class LiYauCheck:
    """One report per configured ``(alpha, a, b)``."""

    u: ScalarEvolution
    bounds: CurvatureBounds

    params = tunable([{"alpha": 2.0, "a": 0.25, "b": 0.125}], key="estimates.liyau")
    budget_constant = tunable(10.0, key="control.budget_constant")

    def execute(self) -> None:
        self.reports = [
            liyau_check(self.u, LiYauParams(**p), self.bounds, self.budget_constant)
            for p in self.params
        ]

    @feedback
    def get_t(self) -> np.ndarray:
        return self.u.times[1:]

    @feedback(key="slack_by_alpha")
    def get_slack(self) -> dict:
        return {f"{r.details['params']['alpha']:g}": r.slack for r in self.reports}


class HamiltonCheck:
    u: ScalarEvolution

    enabled = tunable(True, key="estimates.hamilton.enabled")
    budget_constant = tunable(10.0, key="control.budget_constant")

    def execute(self) -> None:
        self.reports = []
        if not self.enabled:
            return
        self.reports = [hamilton_check(self.u, self.budget_constant)]

    @feedback
    def get_sup_P(self) -> np.ndarray:
        if not self.reports:
            return np.empty(0)
        return self.reports[0].series["sup_P"]


class LemmaCheck:
    """
    Residual of the evolution identity for ``t (|grad f|^2 - alpha f_t)``;
    it must shrink with the grid and the snapshot spacing.
    """

    u: ScalarEvolution

    enabled = tunable(True, key="estimates.lemma.enabled")
    alpha = tunable(2.0, key="estimates.lemma.alpha")
    budget_constant = tunable(10.0, key="control.budget_constant")

    def execute(self) -> None:
        self.reports = []
        self.residual = None
        if not self.enabled:
            return
        grid = self.u.traj.grid
        self.residual = lemma_residual(self.u, self.alpha)
        self.reports = [
            EstimateReport.from_residual(
                f"lemma_identity[alpha={self.alpha:g}]",
                self.residual.sup(),
                {"t": self.residual.argsup()},
                error_budget(max(grid.spacing), self.u.traj.output_spacing, 1.0, self.budget_constant),
            )
        ]
        self.logger.info("lemma identity: sup residual %.3e", self.residual.sup())

    @feedback
    def get_t(self) -> np.ndarray:
        return np.empty(0) if self.residual is None else self.residual.times

    @feedback
    def get_residual(self) -> np.ndarray:
        return np.empty(0) if self.residual is None else self.residual.values


class HarnackCheck:
    """Seeded sweep of spacetime pairs for the first configured parameter set."""

    u: ScalarEvolution
    bounds: CurvatureBounds

    enabled = tunable(True, key="estimates.harnack.enabled")
    samples = tunable(50, key="estimates.harnack.samples")
    pairs = tunable(50, key="estimates.harnack.pairs")
    envelope = tunable("general", key="estimates.harnack.envelope")
    params = tunable([{"alpha": 2.0, "a": 0.25, "b": 0.125}], key="estimates.liyau")
    seed = tunable(0, key="seed")
    budget_constant = tunable(10.0, key="control.budget_constant")

    def execute(self) -> None:
        self.reports = []
        if not self.enabled:
            return
        p = LiYauParams(**self.params[0])
        self.reports = [
            harnack_sweep(
                self.u,
                p,
                self.bounds,
                pairs=self.pairs,
                seed=self.seed,
                samples=self.samples,
                envelope=self.envelope,
                c_b=self.budget_constant,
            )
        ]

    @feedback
    def get_relative_slack(self) -> np.ndarray:
        if not self.reports:
            return np.empty(0)
        return self.reports[0].series["relative_slack"]
