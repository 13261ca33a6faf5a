import logging
from typing import NamedTuple

import numpy as np

from .calculus import partials, second_partials
from .grid import (
    MetricField,
    ScalarField,
    ShapeError,
    SymTensorField,
    Tensor3Field,
    same_grid,
)

logger = logging.getLogger("geometry")

__all__ = [
    "christoffel",
    "ricci",
    "scalar_calculus",
    "tensor_calculus",
    "tracefree_decompose",
    "inner",
    "norm_sq",
    "relative_eigenvalues",
]


class ScalarCalculus(NamedTuple):
    grad: np.ndarray
    grad_sq: ScalarField
    hess: SymTensorField
    lap: ScalarField


class TensorCalculus(NamedTuple):
    nabla: Tensor3Field
    div: np.ndarray
    norm_sq: ScalarField
    grad_trace_sq: ScalarField


class TraceDecomposition(NamedTuple):
    trace_part: SymTensorField
    V: SymTensorField


def christoffel(g: MetricField) -> Tensor3Field:
    """
    Christoffel symbols of the second kind, ``values[..., k, i, j]``.

    Built from centered differences of the metric components; the result
    is symmetric in the lower slots exactly.
    """
    grid = g.grid
    dg = partials(g.matrix, grid)  # dg[..., a, b, c] = d_a g_bc
    lowered = 0.5 * (
        np.einsum("...ijl->...lij", dg) + np.einsum("...jil->...lij", dg) - dg
    )
    gamma = np.einsum("...kl,...lij->...kij", g.inverse, lowered)
    return Tensor3Field(grid, gamma, symmetric_tail=True)


def ricci(g: MetricField, gamma: Tensor3Field = None) -> tuple[SymTensorField, ScalarField]:
    """
    Coordinate Ricci tensor and scalar curvature.

    :param g: the metric
    :param gamma: precomputed Christoffel symbols of ``g``, if at hand
    """
    grid = g.grid
    G = christoffel(g).values if gamma is None else gamma.values
    dG = partials(G, grid)  # dG[..., m, k, i, j] = d_m Gamma^k_ij
    ric = (
        np.einsum("...kkij->...ij", dG)
        - np.einsum("...jkik->...ij", dG)
        + np.einsum("...kkl,...lij->...ij", G, G)
        - np.einsum("...kjl,...lik->...ij", G, G)
    )
    ric = SymTensorField.from_matrix(grid, ric)
    scalar = np.einsum("...ij,...ij->...", g.inverse, ric.matrix)
    return ric, ScalarField(grid, scalar)


def scalar_calculus(g: MetricField, u: ScalarField, gamma: Tensor3Field = None) -> ScalarCalculus:
    """
    Gradient, Hessian and Laplacian of a scalar field.

    Returns the coordinate gradient ``du[..., i]`` together with
    ``|du|^2``, the covariant Hessian and its metric trace.
    """
    grid = same_grid(g, u)
    G = christoffel(g).values if gamma is None else gamma.values
    du = partials(u.values, grid)
    grad_sq = np.einsum("...ij,...i,...j->...", g.inverse, du, du)
    hess = second_partials(u.values, grid) - np.einsum("...kij,...k->...ij", G, du)
    hess = SymTensorField.from_matrix(grid, hess)
    lap = np.einsum("...ij,...ij->...", g.inverse, hess.matrix)
    return ScalarCalculus(du, ScalarField(grid, grad_sq), hess, ScalarField(grid, lap))


def tensor_calculus(g: MetricField, Q: SymTensorField, gamma: Tensor3Field = None) -> TensorCalculus:
    """
    Covariant derivative of a symmetric 2-tensor and the quantities built
    from it.

    * ``nabla[..., k, i, j]`` is the covariant derivative of Q
    * ``div[..., j]`` is its divergence on the first slot
    * ``norm_sq`` is ``|nabla Q|^2`` with every index raised
    * ``grad_trace_sq`` is ``|nabla tr Q|^2``, the trace being taken as the
      metric contraction of ``nabla Q``

    .. note:: Taking the trace after differentiating keeps
              ``|nabla tr Q|^2 <= n |nabla Q|^2`` a pointwise algebraic fact
              on the grid.
    """
    grid = same_grid(g, Q)
    G = christoffel(g).values if gamma is None else gamma.values
    q = Q.matrix
    ginv = g.inverse
    nabla = (
        partials(q, grid)
        - np.einsum("...lki,...lj->...kij", G, q)
        - np.einsum("...lkj,...il->...kij", G, q)
    )
    nabla = Tensor3Field(grid, nabla, symmetric_tail=True).values
    div = np.einsum("...ik,...ikj->...j", ginv, nabla)
    nsq = np.einsum(
        "...ka,...ib,...jc,...kij,...abc->...", ginv, ginv, ginv, nabla, nabla, optimize=True
    )
    tau = np.einsum("...ij,...kij->...k", ginv, nabla)
    tsq = np.einsum("...kl,...k,...l->...", ginv, tau, tau)
    return TensorCalculus(
        Tensor3Field(grid, nabla, symmetric_tail=True),
        div,
        ScalarField(grid, nsq),
        ScalarField(grid, tsq),
    )


def inner(g: MetricField, A: SymTensorField, B: SymTensorField) -> ScalarField:
    """Pointwise ``<A, B>_g = g^ia g^jb A_ij B_ab``."""
    grid = same_grid(g, A, B)
    ginv = g.inverse
    value = np.einsum("...ia,...jb,...ij,...ab->...", ginv, ginv, A.matrix, B.matrix, optimize=True)
    return ScalarField(grid, value)


def norm_sq(g: MetricField, A: SymTensorField) -> ScalarField:
    return inner(g, A, A)


def trace(g: MetricField, A: SymTensorField) -> np.ndarray:
    return np.einsum("...ij,...ij->...", g.inverse, A.matrix)


def tracefree_decompose(g: MetricField, Q: SymTensorField) -> TraceDecomposition:
    """Splits Q into its pure-trace part and the trace-free remainder V."""
    grid = same_grid(g, Q)
    n = grid.dim
    tr = trace(g, Q)
    trace_part = (tr / n)[..., None, None] * g.matrix
    V = Q.matrix - trace_part
    return TraceDecomposition(
        SymTensorField.from_matrix(grid, trace_part), SymTensorField.from_matrix(grid, V)
    )


def relative_eigenvalues(g: MetricField, A: SymTensorField) -> np.ndarray:
    """
    Eigenvalues of A relative to g, i.e. of ``g^-1 A``, ascending per point.

    Uses the Cholesky factor ``g = L L^T`` so the problem stays symmetric.
    """
    if A.grid != g.grid:
        raise ShapeError("tensor and metric live on different grids")
    L = np.linalg.cholesky(g.matrix)
    Linv = np.linalg.inv(L)
    M = np.einsum("...ia,...ab,...jb->...ij", Linv, A.matrix, Linv, optimize=True)
    return np.linalg.eigvalsh(0.5 * (M + np.swapaxes(M, -1, -2)))
