import numpy as np

from grflow.estimates import EstimateReport, error_budget
from grflow.flow import (
    CurvatureBounds,
    Trajectory,
    cohomology_drift,
    h_norm_series,
    volume_evolution_residual,
)

from ..lab_tunable import feedback, tunable

#: Roundoff allowance for quantities the discrete flow conserves exactly.
CONSERVATION_TOLERANCE = 1e-10


class FlowIdentities:
    """
    Identities of the flow itself: the volume-form evolution, conservation
    of the cohomology class of H, and preservation of ``H = 0``.
    """

    traj: Trajectory
    bounds: CurvatureBounds

    budget_constant = tunable(10.0, key="control.budget_constant")

    def execute(self) -> None:
        traj = self.traj
        grid = traj.grid
        h = max(grid.spacing)
        dt = traj.output_spacing

        self.volume = volume_evolution_residual(traj)
        self.drift = cohomology_drift(traj)
        self.h_norm = h_norm_series(traj)

        self.reports = [
            EstimateReport.from_residual(
                "volume_evolution",
                self.volume.sup(),
                {"t": self.volume.argsup()},
                error_budget(h, dt, 1.0, self.budget_constant),
            ),
        ]
        if traj.has_h:
            scale = max(1.0, float(np.max(np.abs(traj[0].H.phi))) * grid.volume)
            self.reports.append(
                EstimateReport.from_residual(
                    "cohomology_class",
                    float(np.max(np.abs(self.drift.values))),
                    {"t": float(traj.times[int(np.argmax(np.abs(self.drift.values)))])},
                    CONSERVATION_TOLERANCE * scale,
                )
            )
            if self.h_norm.values[0] == 0:
                self.reports.append(
                    EstimateReport.from_residual(
                        "h_preservation",
                        self.h_norm.sup(),
                        {"t": self.h_norm.argsup()},
                        float(np.finfo(float).eps),
                    )
                )
        for r in self.reports:
            self.logger.info("%s: %s (slack %.3e)", r.check, r.verdict, r.slack)

    @feedback
    def get_t(self) -> np.ndarray:
        return self.traj.times

    @feedback
    def get_volume_residual(self) -> np.ndarray:
        return self.volume.values

    @feedback
    def get_cohomology_drift(self) -> np.ndarray:
        return self.drift.values

    @feedback
    def get_h_norm(self) -> np.ndarray:
        return self.h_norm.values

    @feedback(key="curvature_bounds")
    def get_bounds(self) -> dict:
        return self.bounds.as_dict()
