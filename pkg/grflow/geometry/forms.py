from typing import NamedTuple

import numpy as np

from .grid import (
    MetricField,
    ScalarField,
    SymTensorField,
    ThreeFormField,
    UnsupportedDimensionError,
    same_grid,
)
from .operators import divergence_form, metric_weights

__all__ = ["FORM_NORM", "hform_ops", "levi_civita", "three_form_components"]

#: Ratio tr_g(H^2) / |H|^2 for a 3-form under the 1/k! inner product on
#: k-forms. The flow identities use tr_g(H^2); this constant ties the two.
FORM_NORM = 3.0


class HFormOps(NamedTuple):
    h_sq: SymTensorField
    norm_h_sq: ScalarField
    trace_h_sq: ScalarField
    dd_star: ThreeFormField


def levi_civita(dim: int = 3) -> np.ndarray:
    eps = np.zeros((dim,) * dim)
    for i in range(dim):
        for j in range(dim):
            for k in range(dim):
                eps[i, j, k] = (i - j) * (j - k) * (k - i) / 2
    return eps


_EPS = levi_civita(3)


def three_form_components(H: ThreeFormField) -> np.ndarray:
    """Fully antisymmetric components ``H[..., i, j, k]``."""
    return H.phi[..., None, None, None] * _EPS


def hform_ops(g: MetricField, H: ThreeFormField) -> HFormOps:
    """
    The tensors built from a closed 3-form H.

    * ``h_sq``: ``H^2_ij = 1/2 H_ikl H_jmn g^km g^ln``, positive semidefinite
    * ``norm_h_sq``: ``|H|^2 = 1/6 H_ijk H^ijk``
    * ``trace_h_sq``: ``tr_g H^2``, which equals ``FORM_NORM * |H|^2``
    * ``dd_star``: ``d d* H``, with the sign fixed so that
      ``dH/dt = -dd* H`` is the heat flow of the coefficient density

    The coefficient of ``dd* H`` is ``-sqrt(G) Laplacian_g(phi / sqrt(G))``,
    evaluated with the conservative divergence-form stencil. On a flat
    metric this is ``-Laplacian(phi)``.
    """
    grid = same_grid(g, H)
    if grid.dim != 3:
        raise UnsupportedDimensionError(f"H-form operations need dimension 3, got {grid.dim}")

    ginv = g.inverse
    Hc = three_form_components(H)
    h_sq = 0.5 * np.einsum("...ikl,...jmn,...km,...ln->...ij", Hc, Hc, ginv, ginv, optimize=True)
    norm = np.einsum(
        "...ijk,...abc,...ia,...jb,...kc->...", Hc, Hc, ginv, ginv, ginv, optimize=True
    ) / 6.0
    h_sq = SymTensorField.from_matrix(grid, h_sq)
    trace_h_sq = np.einsum("...ij,...ij->...", ginv, h_sq.matrix)

    density = H.phi / g.sqrt_det
    dd_star = -divergence_form(grid, metric_weights(g), density)

    return HFormOps(
        h_sq,
        ScalarField(grid, norm),
        ScalarField(grid, trace_h_sq),
        ThreeFormField.from_values(grid, dd_star),
    )
