"""
Post-processing of flow trajectories: curvature bounds and the identities
every solution of the flow satisfies.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..geometry import hform_ops, relative_eigenvalues, ricci, tensor_calculus
from ..geometry.calculus import coordinate_integral
from ..misc import ordered_map
from .state import FlowState, TimeSeries, Trajectory

logger = logging.getLogger("flow")

__all__ = [
    "CurvatureBounds",
    "curvature_bounds",
    "volume_evolution_residual",
    "cohomology_drift",
    "h_norm_series",
]


@dataclass(frozen=True)
class CurvatureBounds:
    """
    Empirical constants of the Li-Yau hypotheses::

        -K1/t g <= Ric <= K2/t g,   H^2 <= K3/t g,   |nabla H^2| <= K4
    """

    K1: float = 0.0
    K2: float = 0.0
    K3: float = 0.0
    K4: float = 0.0

    def __post_init__(self) -> None:
        for name in ("K1", "K2", "K3", "K4"):
            value = float(getattr(self, name))
            if not value >= 0:
                raise ValueError(f"{name} must be nonnegative, got {value}")
            object.__setattr__(self, name, value)

    @property
    def K(self) -> float:
        return max(self.K1**2, self.K2**2)

    def as_dict(self) -> dict:
        return {"K1": self.K1, "K2": self.K2, "K3": self.K3, "K4": self.K4, "K": self.K}


def _snapshot_bounds(s: FlowState) -> tuple[float, float, float, float]:
    ric, _ = ricci(s.g)
    eig = relative_eigenvalues(s.g, ric)
    k1 = s.t * max(0.0, -float(eig[..., 0].min()))
    k2 = s.t * max(0.0, float(eig[..., -1].max()))
    if s.H is None:
        return k1, k2, 0.0, 0.0
    h_sq = hform_ops(s.g, s.H).h_sq
    k3 = s.t * max(0.0, float(relative_eigenvalues(s.g, h_sq)[..., -1].max()))
    k4 = float(np.sqrt(tensor_calculus(s.g, h_sq).norm_sq.values.max()))
    return k1, k2, k3, k4


def curvature_bounds(traj: Trajectory) -> CurvatureBounds:
    """
    Suprema over the snapshots of the scaled relative eigenvalues of Ric and
    H^2, and of ``|nabla H^2|_g``. The snapshot at t = 0 only feeds K4.
    """
    per_snapshot = np.array(ordered_map(_snapshot_bounds, traj.states))
    kb = CurvatureBounds(*per_snapshot.max(axis=0))
    logger.debug("curvature bounds %s", kb)
    return kb


def volume_evolution_residual(traj: Trajectory) -> TimeSeries:
    """
    Sup-norm residual of ``d/dt sqrt(G) = (-R + tr_g(H^2) / 4) sqrt(G)`` per
    snapshot, with the time derivative taken by second order differences of
    the snapshots.
    """
    if len(traj) < 3:
        raise ValueError("volume evolution needs at least 3 snapshots")
    vol = np.stack([s.g.sqrt_det for s in traj.states])
    dvol = np.gradient(vol, traj.times, axis=0, edge_order=2)

    def expected(s: FlowState) -> np.ndarray:
        _, R = ricci(s.g)
        density = -R.values
        if s.H is not None:
            density = density + 0.25 * hform_ops(s.g, s.H).trace_h_sq.values
        return density * s.g.sqrt_det

    rhs = np.stack(ordered_map(expected, traj.states))
    residual = np.abs(dvol - rhs).reshape(len(traj), -1).max(axis=1)
    return TimeSeries(traj.times, residual)


def cohomology_drift(traj: Trajectory) -> TimeSeries:
    """Change of ``integral(phi dx)``, the cohomology class of H, from t = 0."""
    if not traj.has_h:
        return TimeSeries(traj.times, np.zeros(len(traj)))
    grid = traj.grid
    totals = np.array([coordinate_integral(grid, s.H.phi) for s in traj.states])
    return TimeSeries(traj.times, totals - totals[0])


def h_norm_series(traj: Trajectory) -> TimeSeries:
    """``||H(t)||_{L^2(g(t))}`` per snapshot; identically 0 without H."""
    if not traj.has_h:
        return TimeSeries(traj.times, np.zeros(len(traj)))

    def norm(s: FlowState) -> float:
        dens = hform_ops(s.g, s.H).norm_h_sq.values * s.g.sqrt_det
        return float(np.sqrt(coordinate_integral(s.grid, dens)))

    return TimeSeries(traj.times, np.array(ordered_map(norm, traj.states)))
