from .milnor import (
    PRESETS,
    CollapseError,
    MilnorState,
    bismut_flat_k,
    evolve_ode,
    h_squared,
    homogeneous_rhs,
    integrate_fixed,
    koszul_ricci,
    milnor_ricci,
)
from .reports import (
    HomogeneousReport,
    grid_consistency,
    homogeneous_bounds,
    homogeneous_reports,
    stationary_drift,
    volume_residual,
)
