from .report import EstimateReport, Verdict, error_budget, worst_verdict
from .liyau import (
    LiYauConstants,
    LiYauParams,
    ParameterError,
    balanced_envelope,
    liyau_check,
    liyau_constants,
    liyau_rhs,
    ricci_flow_envelope,
)
from .hamilton import hamilton_check, hamilton_quantity
from .lemma import lemma_residual
from .geodesic import GeodesicError, GeodesicPath, geodesic
from .harnack import TimeOrderError, harnack_check, harnack_sweep, harnack_xi
