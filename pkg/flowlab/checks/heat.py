import numpy as np

from grflow.estimates import EstimateReport, error_budget
from grflow.heat import (
    ScalarEvolution,
    WeightedMeasure,
    duality_series,
    mass_series,
    measure_evolution_residual,
)
from grflow.heat.solvers import MASS_TOLERANCE

from ..lab_tunable import feedback, tunable


class ConjugateChecks:
    """Unit mass of the weighted measure, its evolution law and the duality pairing."""

    u: ScalarEvolution
    kernel: ScalarEvolution
    measure: WeightedMeasure

    budget_constant = tunable(10.0, key="control.budget_constant")

    def execute(self) -> None:
        mu = self.measure
        grid = mu.traj.grid
        h = max(grid.spacing)
        dt = mu.traj.output_spacing

        self.mass = mass_series(mu)
        self.evolution = measure_evolution_residual(mu)
        self.pairing = duality_series(self.u, self.kernel)

        mass_error = np.abs(self.mass.values - 1)
        k = int(np.argmax(mass_error))
        density_scale = float(np.max(np.abs(mu.density)))
        pairing_error = np.abs(self.pairing.values - self.pairing.values[-1])
        j = int(np.argmax(pairing_error))

        self.reports = [
            EstimateReport.from_residual(
                "conjugate_mass",
                float(mass_error[k]),
                {"t": float(self.mass.times[k])},
                MASS_TOLERANCE,
            ),
            EstimateReport.from_residual(
                "measure_evolution",
                self.evolution.sup(),
                {"t": self.evolution.argsup()},
                error_budget(h, dt, density_scale, self.budget_constant),
            ),
            EstimateReport.from_residual(
                "duality",
                float(pairing_error[j]),
                {"t": float(self.pairing.times[j])},
                error_budget(h, dt, self.pairing.values[-1], self.budget_constant),
            ),
        ]
        for r in self.reports:
            self.logger.info("%s: %s (slack %.3e)", r.check, r.verdict, r.slack)

    @feedback
    def get_t(self) -> np.ndarray:
        return self.mass.times

    @feedback
    def get_mass(self) -> np.ndarray:
        return self.mass.values

    @feedback
    def get_measure_evolution_residual(self) -> np.ndarray:
        return self.evolution.values

    @feedback
    def get_duality(self) -> np.ndarray:
        return self.pairing.values
