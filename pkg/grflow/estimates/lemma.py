import logging

import numpy as np

from ..flow.state import TimeSeries
from ..geometry import (
    ScalarField,
    SymTensorField,
    christoffel,
    hform_ops,
    ricci,
    scalar_calculus,
    tensor_calculus,
)
from ..geometry.calculus import partials
from ..geometry.curvature import inner, norm_sq
from ..heat.solvers import ScalarEvolution

logger = logging.getLogger("estimates")


def _pair(ginv: np.ndarray, v: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...i,...j->...", ginv, v, w)


def _form(B: np.ndarray, ginv: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``B(grad f, grad f)`` for a coordinate gradient ``v``."""
    up = np.einsum("...ij,...j->...i", ginv, v)
    return np.einsum("...ij,...i,...j->...", B, up, up)


def lemma_sides(
    u: ScalarEvolution,
    alpha: float,
    k: int,
    f: np.ndarray,
    ft: np.ndarray,
    F: np.ndarray,
    Ft: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of the evolution identity for F at snapshot ``k``."""
    s = u.traj[k]
    g = s.g
    grid = g.grid
    t = u.times[k]
    ginv = g.inverse
    gamma = christoffel(g)

    fc = scalar_calculus(g, ScalarField(grid, f[k]), gamma)
    Fc = scalar_calculus(g, ScalarField(grid, F[k]), gamma)
    ric, _ = ricci(g, gamma)
    df = fc.grad
    w = fc.grad_sq.values

    if s.H is not None:
        ops = hform_ops(g, s.H)
        h_sq = ops.h_sq
        tr_grad = partials(ops.trace_h_sq.values, grid)
        div_h = tensor_calculus(g, h_sq, gamma).div
        h_ff = _form(h_sq.matrix, ginv, df)
        drift = 0.25 * _pair(ginv, df, tr_grad) - 0.5 * _pair(ginv, df, div_h)
        shifted = ric.matrix - 0.25 * h_sq.matrix
    else:
        h_ff = 0.0
        drift = 0.0
        shifted = ric.matrix

    lhs = Fc.lap.values - Ft[k]
    rhs = (
        -2 * _pair(ginv, df, Fc.grad)
        + t
        * (
            2 * norm_sq(g, fc.hess).values
            + 2 * alpha * inner(g, SymTensorField.from_matrix(grid, shifted), fc.hess).values
        )
        + t * (2 * alpha * _form(ric.matrix, ginv, df) - 0.5 * alpha * h_ff + 0.5 * h_ff)
        + t * alpha * drift
        - (w - alpha * ft[k])
    )
    return lhs, rhs


def lemma_residual(u: ScalarEvolution, alpha: float) -> TimeSeries:
    """
    Sup-norm mismatch of the evolution identity satisfied by
    ``F = t (|grad f|^2 - alpha f_t)``, ``f = ln u``, per snapshot.

    Time derivatives are second order differences of the snapshots; the
    first and last two snapshots are skipped so every derivative is
    centered.
    """
    if len(u) < 3:
        raise ValueError("the identity needs at least 3 snapshots")
    grid = u.traj.grid
    f = np.log(u.values)
    ft = u.time_derivative(f)
    w = np.stack(
        [scalar_calculus(u.traj[k].g, ScalarField(grid, f[k])).grad_sq.values for k in range(len(u))]
    )
    F = u.times.reshape((-1,) + (1,) * grid.dim) * (w - alpha * ft)
    Ft = u.time_derivative(F)

    lo = 2 if len(u) >= 5 else 1
    ks = range(lo, len(u) - lo)
    res = []
    for k in ks:
        lhs, rhs = lemma_sides(u, alpha, k, f, ft, F, Ft)
        res.append(float(np.max(np.abs(lhs - rhs))))
    series = TimeSeries(u.times[lo: len(u) - lo], np.array(res))
    logger.info("lemma identity: sup residual %.3e over %d snapshots", series.sup(), len(res))
    return series
