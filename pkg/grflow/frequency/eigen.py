"""
First nonzero eigenvalue of the weighted Dirichlet form

    lambda_M = min  int |grad v|^2 dmu / int v^2 dmu   over  int v dmu = 0

found by shifted inverse power iteration on ``S v = lambda M v`` with
``M = diag(rho)`` and ``S`` the stiffness matrix of ``K sqrt(G) g^-1``.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.sparse import diags
from scipy.sparse.linalg import splu

from ..estimates.report import BUDGET_CONSTANT, EstimateReport
from ..flow.state import TimeSeries, Trajectory
from ..geometry import MetricField, dirichlet_matrix
from ..geometry.operators import metric_weights
from ..heat.solvers import WeightedMeasure
from ..misc import ordered_map
from .params import FrequencyParams
from .series import FrequencySeries, _monotone_report, window_indices

logger = logging.getLogger("frequency")

__all__ = [
    "EigenSolverError",
    "WeightedEigenpair",
    "weighted_eigenpair",
    "eigenvalue_series",
    "eigenvalue_check",
]


class EigenSolverError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class WeightedEigenpair:
    value: float
    vector: np.ndarray
    iterations: int

    def rayleigh_quotient(self, S, M) -> float:
        v = self.vector.ravel()
        return float(v @ (S @ v)) / float(v @ (M @ v))


def _operators(g: MetricField, density: np.ndarray):
    grid = g.grid
    K = density / g.sqrt_det
    W = K[..., None, None] * metric_weights(g)
    S = dirichlet_matrix(grid, W) * grid.cell_volume
    M = diags(density.ravel() * grid.cell_volume).tocsc()
    return S.tocsc(), M


def _start_vector(g: MetricField, seed: int) -> np.ndarray:
    grid = g.grid
    coords = grid.coordinates()
    v = np.zeros(grid.shape)
    for a in range(grid.dim):
        v += np.cos(2 * np.pi * coords[a] / grid.sides[a] + 0.3 * a)
    rng = np.random.default_rng(seed)
    return (v + 1e-3 * rng.standard_normal(grid.shape)).ravel()


def weighted_eigenpair(
    g: MetricField,
    density: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 500,
    seed: int = 0,
) -> WeightedEigenpair:
    """
    :param density: the measure against coordinate cells, ``K sqrt(G)``
    :raises EigenSolverError: if the iteration does not settle within
        ``max_iter`` steps
    """
    grid = g.grid
    grid.check(density)
    S, M = _operators(g, density)
    m = M.diagonal()
    total = m.sum()

    def deflate(v: np.ndarray) -> np.ndarray:
        v = v - (m @ v) / total
        return v / np.sqrt(v @ (m * v))

    v = deflate(_start_vector(g, seed))
    lam = float(v @ (S @ v))
    shift = 0.1 * lam
    lu = splu((S + shift * M).tocsc())

    for it in range(1, max_iter + 1):
        v = deflate(lu.solve(m * v))
        new = float(v @ (S @ v))
        if abs(new - lam) <= tol * abs(new):
            lam = new
            break
        lam = new
    else:
        raise EigenSolverError(
            f"inverse iteration did not converge in {max_iter} steps (last value {lam:.12g})"
        )
    if not lam > 0:
        raise EigenSolverError(f"weighted eigenvalue came out non-positive: {lam}")
    logger.debug("weighted eigenvalue %.12g after %d iterations", lam, it)
    return WeightedEigenpair(lam, v.reshape(grid.shape), it)


def eigenvalue_series(
    traj: Trajectory,
    mu: WeightedMeasure,
    p: Optional[FrequencyParams] = None,
    tol: float = 1e-10,
    max_iter: int = 500,
) -> TimeSeries:
    """
    ``lambda_M`` at every snapshot of the measure, or only at the window
    snapshots when ``p`` is given.
    """
    if mu.traj is not traj:
        raise ValueError("the measure lives on another trajectory")
    ks = range(len(mu)) if p is None else window_indices(mu.times, p)
    values = ordered_map(
        lambda k: weighted_eigenpair(traj[k].g, mu.density[k], tol, max_iter).value,
        list(ks),
    )
    series = TimeSeries(traj.times[list(ks)], np.array(values))
    logger.info(
        "weighted eigenvalue over %d snapshots: %.6g .. %.6g",
        len(values), min(values), max(values),
    )
    return series


def eigenvalue_check(
    s: FrequencySeries, p: FrequencyParams, c_b: float = BUDGET_CONSTANT
) -> EstimateReport:
    """
    ``beta h lambda_M`` increases where ``h < 0`` and decreases where
    ``h > 0``. A failure at tight tolerance may come from reading
    ``lambda_M`` as the first nonzero eigenvalue rather than an infimum over
    positive functions.
    """
    if s.lambda_M is None:
        raise ValueError("the series carries no eigenvalues; see eigenvalue_series")
    weighted = s.beta * s.h * s.lambda_M
    return _monotone_report("eigenvalue_monotonicity", s.times, weighted, p.sign, s, c_b)
