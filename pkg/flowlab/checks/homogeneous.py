import numpy as np

from grflow.homogeneous import HomogeneousReport, homogeneous_reports

from ..lab_tunable import feedback


class HomogeneousCheck:
    """Flow identities of a left-invariant run on a unimodular group."""

    states: tuple

    def execute(self) -> None:
        self.result: HomogeneousReport = homogeneous_reports(self.states)
        self.reports = list(self.result.reports)

    @feedback(key="series")
    def get_columns(self) -> dict[str, np.ndarray]:
        return self.result.columns()

    @feedback(key="curvature_bounds")
    def get_bounds(self) -> dict:
        return self.result.bounds.as_dict()

    @feedback(key="grid_consistency")
    def get_consistency(self) -> dict:
        return dict(self.result.consistency)
