from typing import Optional

import numpy as np

from grflow.estimates import EstimateReport, error_budget
from grflow.flow import CurvatureBounds, Trajectory
from grflow.frequency import (
    DegenerateFrequencyError,
    FrequencyParams,
    FrequencySeries,
    compute_series,
    eigenvalue_check,
    eigenvalue_series,
    frequency_constants,
    hamilton_energy_check,
    i_prime_identity,
    integral_harnack_check,
    monotonicity_check,
)
from grflow.geometry import ScalarField
from grflow.heat import ScalarEvolution, WeightedMeasure

from ..lab_tunable import feedback, tunable
from ..scenario import Scenario


class FrequencyCheck:
    """
    The parabolic frequency of the heat solution against the conjugate
    measure, over the configured window.
    """

    scenario: Scenario
    traj: Trajectory
    bounds: CurvatureBounds
    u: ScalarEvolution
    u0: ScalarField
    measure: WeightedMeasure

    enabled = tunable(True, key="frequency.enabled")
    eigenvalues = tunable(True, key="frequency.eigenvalues")
    budget_constant = tunable(10.0, key="control.budget_constant")

    series: Optional[FrequencySeries] = None

    def execute(self) -> None:
        self.reports = []
        self.series = None
        if not self.enabled:
            return

        c_b = self.budget_constant
        try:
            fc = frequency_constants(self.traj.dim, self.bounds, self.u0)
        except DegenerateFrequencyError as e:
            # constant data: I is constant and D vanishes, nothing to check
            self.logger.warning("frequency skipped: %s", e)
            return

        p: FrequencyParams = self.scenario.frequency_params(float(self.measure.times[-1]))
        s = compute_series(self.u, self.measure, p, fc)
        if self.eigenvalues:
            lam = eigenvalue_series(self.traj, self.measure, p)
            s = s.with_eigenvalues(lam.values)
        self.series = s
        self.params = p

        self.reports = [
            monotonicity_check(s, p, c_b),
            integral_harnack_check(s, p, c_b),
            hamilton_energy_check(s, c_b),
        ]
        if len(s) >= 3:
            res = i_prime_identity(s, p)
            scale = float(np.max(np.abs(2 * s.D / s.h)))
            self.reports.append(
                EstimateReport.from_residual(
                    "i_prime_identity",
                    res.sup(),
                    {"t": res.argsup()},
                    error_budget(0.0, s.dt, max(scale, float(np.max(s.I))), c_b),
                )
            )
        if s.lambda_M is not None:
            self.reports.append(eigenvalue_check(s, p, c_b))

    @feedback(key="series")
    def get_columns(self) -> dict:
        return {} if self.series is None else self.series.columns()

    @feedback
    def get_constants(self) -> dict:
        return {} if self.series is None else self.series.constants.as_dict()

    @feedback
    def get_window(self) -> dict:
        return {} if self.series is None else self.params.as_dict()
