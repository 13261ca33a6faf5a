"""
Conservative divergence-form operators.

``L_A(v) = d_i (A^ij d_j v)`` with ``A = sqrt(G) g^-1`` is discretised with
staggered stencils on the diagonal and centered differences for the mixed
terms, both at ``grid.order``. The discrete operator is symmetric and its
grid sum vanishes, so mass and duality identities hold to rounding. Every
time integrator of the package goes through it.
"""

import functools

import numpy as np
import scipy.sparse as sp

from .calculus import backward, diff, face_average, forward
from .grid import GridSpec, MetricField, ScalarField, same_grid

__all__ = [
    "metric_weights",
    "divergence_form",
    "laplacian",
    "gradient_energy",
    "dirichlet_matrix",
    "integrate",
]


def metric_weights(g: MetricField) -> np.ndarray:
    """``sqrt(G) g^ij`` per point."""
    return g.sqrt_det[..., None, None] * g.inverse


def divergence_form(grid: GridSpec, A: np.ndarray, v: np.ndarray) -> np.ndarray:
    """
    Applies ``L_A`` to the array ``v``.

    :param grid: the grid
    :param A: symmetric coefficient matrices, shape ``grid.shape + (d, d)``
    :param v: values per point
    """
    h = grid.spacing
    p = grid.order
    out = np.zeros(grid.shape)
    for i in range(grid.dim):
        flux = face_average(A[..., i, i], i, p) * forward(v, i, h[i], p)
        out += backward(flux, i, h[i], p)
        for j in range(grid.dim):
            if j != i:
                out += diff(A[..., i, j] * diff(v, j, h[j], p), i, h[i], p)
    return out


def laplacian(g: MetricField, u: ScalarField) -> ScalarField:
    """Laplace-Beltrami operator of g applied to u, in divergence form."""
    grid = same_grid(g, u)
    return ScalarField(grid, divergence_form(grid, metric_weights(g), u.values) / g.sqrt_det)


def gradient_energy(grid: GridSpec, A: np.ndarray, u: np.ndarray) -> np.ndarray:
    """
    Discrete ``sqrt(G) |grad u|^2`` matched to ``L_A``.

    Defined as ``L_A(u^2) / 2 - u L_A(u)``, so that for any weight ``w``
    the sum of ``w`` times this density equals the Dirichlet form of u
    appearing in ``sum(w L_A(u^2)) - 2 sum(w u L_A(u))``.
    """
    return 0.5 * divergence_form(grid, A, u * u) - u * divergence_form(grid, A, u)


def integrate(g: MetricField, s: np.ndarray) -> float:
    """Riemannian integral of point values ``s`` against ``dV_g``."""
    grid = g.grid
    return float(np.sum(s * g.sqrt_det) * grid.cell_volume)


# stencil offsets and weights, in units of 1/h
_FORWARD = {2: {0: -1.0, 1: 1.0}, 4: {-1: 1 / 24, 0: -27 / 24, 1: 27 / 24, 2: -1 / 24}}
_CENTERED = {2: {-1: -0.5, 1: 0.5}, 4: {-2: 1 / 12, -1: -8 / 12, 1: 8 / 12, 2: -1 / 12}}


def _circulant(n: int, h: float, stencil: dict) -> sp.csr_matrix:
    idx = np.arange(n)
    rows = np.concatenate([idx] * len(stencil))
    cols = np.concatenate([(idx + k) % n for k in stencil])
    vals = np.concatenate([np.full(n, w / h) for w in stencil.values()])
    # duplicates are summed when n is smaller than the stencil
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


@functools.lru_cache(maxsize=32)
def _difference_matrices(grid: GridSpec) -> tuple[tuple, tuple]:
    fwd = []
    cen = []
    for axis in range(grid.dim):
        n = grid.points[axis]
        h = grid.spacing[axis]
        fwd.append(_on_axis(grid, axis, _circulant(n, h, _FORWARD[grid.order])))
        cen.append(_on_axis(grid, axis, _circulant(n, h, _CENTERED[grid.order])))
    return tuple(fwd), tuple(cen)


def _on_axis(grid: GridSpec, axis: int, op: sp.spmatrix) -> sp.csr_matrix:
    # row-major flattening: the first kron factor acts on grid axis 0
    factors = [sp.identity(n, format="csr") for n in grid.points]
    factors[axis] = op
    out = factors[0]
    for f in factors[1:]:
        out = sp.kron(out, f, format="csr")
    return out.tocsr()


def dirichlet_matrix(grid: GridSpec, W: np.ndarray) -> sp.csr_matrix:
    """
    Symmetric stiffness matrix ``S`` with ``-S v = L_W(v)`` on flattened
    arrays (row-major order).

    :param W: coefficient matrices per point, shape ``grid.shape + (d, d)``
    """
    fwd, cen = _difference_matrices(grid)
    n = grid.size
    S = sp.csr_matrix((n, n))
    for i in range(grid.dim):
        faces = face_average(W[..., i, i], i, grid.order).ravel()
        S = S + fwd[i].T @ sp.diags(faces) @ fwd[i]
        for j in range(grid.dim):
            if j != i:
                S = S + cen[i].T @ sp.diags(W[..., i, j].ravel()) @ cen[j]
    return S.tocsr()
