from .state import FlowState, TimeSeries, Trajectory, frozen_trajectory
from .engine import (
    SingularityError,
    StepBudgetError,
    StepControl,
    StepSizeError,
    evolve,
    grf_rhs,
    stability_ceiling,
    step,
)
from .diagnostics import (
    CurvatureBounds,
    cohomology_drift,
    curvature_bounds,
    h_norm_series,
    volume_evolution_residual,
)
from .io import load_trajectory, save_trajectory

__all__ = (
    "FlowState",
    "Trajectory",
    "TimeSeries",
    "frozen_trajectory",
    "SingularityError",
    "StepBudgetError",
    "StepSizeError",
    "StepControl",
    "grf_rhs",
    "stability_ceiling",
    "step",
    "evolve",
    "CurvatureBounds",
    "curvature_bounds",
    "volume_evolution_residual",
    "cohomology_drift",
    "h_norm_series",
    "load_trajectory",
    "save_trajectory",
)
