"""
Initial-data families for metrics, 3-form coefficients and heat data.

Each family is a plain function of the grid and its parameters. The
registries at the bottom map scenario names onto them.
"""

import itertools
import logging
from typing import Callable, Optional, Sequence

import numpy as np

from .grid import GridSpec, MetricField, ScalarField, ThreeFormField

logger = logging.getLogger("geometry")

__all__ = [
    "flat_metric",
    "conformal_factor",
    "conformal_bump_metric",
    "random_smooth_symmetric",
    "random_smooth_metric",
    "constant_scalar",
    "single_mode",
    "METRIC_FAMILIES",
    "H_FAMILIES",
    "SCALAR_FAMILIES",
]


def _axes(grid: GridSpec, axes: Optional[Sequence[int]]) -> list[int]:
    if axes is None:
        return list(range(grid.dim))
    bad = [a for a in axes if not 0 <= a < grid.dim]
    if bad:
        raise ValueError(f"axes {bad} out of range for a {grid.dim}-dimensional grid")
    return list(axes)


def flat_metric(grid: GridSpec, scale: float = 1.0) -> MetricField:
    return MetricField.flat(grid, scale)


def conformal_factor(
    grid: GridSpec,
    amplitude: float = 0.1,
    frequency: int = 1,
    axes: Optional[Sequence[int]] = (0,),
    phase: float = 0.0,
) -> np.ndarray:
    """``phi = amplitude * prod_a sin(2 pi f x_a / L_a + phase)`` over the chosen axes."""
    x = grid.coordinates()
    phi = np.full(grid.shape, float(amplitude))
    for a in _axes(grid, axes):
        phi = phi * np.sin(2 * np.pi * frequency * x[a] / grid.sides[a] + phase)
    return phi


def conformal_bump_metric(
    grid: GridSpec,
    amplitude: float = 0.1,
    frequency: int = 1,
    axes: Optional[Sequence[int]] = (0,),
    conformal_axes: Optional[Sequence[int]] = None,
    phase: float = 0.0,
) -> MetricField:
    """
    ``g = exp(2 phi) dx^2`` on the conformal axes, flat on the rest.

    With ``conformal_axes`` a proper subset this is a product of a conformal
    torus with a flat one.
    """
    phi = conformal_factor(grid, amplitude, frequency, axes, phase)
    diag = np.ones(grid.shape + (grid.dim,))
    for a in _axes(grid, conformal_axes):
        diag[..., a] = np.exp(2 * phi)
    matrix = np.zeros(grid.shape + (grid.dim, grid.dim))
    idx = np.arange(grid.dim)
    matrix[..., idx, idx] = diag
    return MetricField.from_matrix(grid, matrix)


def random_smooth_symmetric(
    grid: GridSpec,
    rng: np.random.Generator,
    amplitude: float = 0.2,
    bandwidth: int = 1,
    axes: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """
    Band-limited random symmetric matrix field with spectral norm at most
    ``amplitude`` everywhere.

    Wave vectors have integer components in ``[-bandwidth, bandwidth]`` on
    the chosen axes and zero elsewhere.
    """
    d = grid.dim
    x = grid.coordinates()
    axes = _axes(grid, axes)
    out = np.zeros(grid.shape + (d, d))
    ranges = [range(-bandwidth, bandwidth + 1) if a in axes else (0,) for a in range(d)]
    for k in itertools.product(*ranges):
        if not any(k):
            continue
        theta = sum(2 * np.pi * k[a] * x[a] / grid.sides[a] for a in range(d))
        for trig in (np.cos, np.sin):
            c = rng.standard_normal((d, d))
            c = 0.5 * (c + c.T)
            out += trig(theta)[..., None, None] * c
    radius = np.abs(np.linalg.eigvalsh(out)).max()
    if radius > 0:
        out *= amplitude / radius
    return out


def random_smooth_metric(
    grid: GridSpec,
    seed: int = 0,
    amplitude: float = 0.2,
    bandwidth: int = 1,
    axes: Optional[Sequence[int]] = None,
) -> MetricField:
    """Identity plus :func:`random_smooth_symmetric`; SPD for amplitude below 1."""
    if not 0 <= amplitude < 1:
        raise ValueError(f"random metric amplitude must lie in [0, 1), got {amplitude}")
    rng = np.random.default_rng(seed)
    pert = random_smooth_symmetric(grid, rng, amplitude, bandwidth, axes)
    return MetricField.from_matrix(grid, np.eye(grid.dim) + pert)


def constant_scalar(grid: GridSpec, value: float = 1.0) -> ScalarField:
    return ScalarField.constant(grid, value)


def single_mode(
    grid: GridSpec,
    mean: float = 1.0,
    amplitude: float = 0.3,
    frequency: int = 1,
    axis: int = 0,
) -> ScalarField:
    """``mean + amplitude * sin(2 pi f x_axis / L)``."""
    x = grid.coordinates()[_axes(grid, [axis])[0]]
    values = mean + amplitude * np.sin(2 * np.pi * frequency * x / grid.sides[axis])
    return ScalarField(grid, values)


def _h_constant(grid: GridSpec, value: float = 1.0) -> ThreeFormField:
    return ThreeFormField(grid, constant_scalar(grid, value))


def _h_single_mode(grid: GridSpec, **params) -> ThreeFormField:
    return ThreeFormField(grid, single_mode(grid, **params))


def _h_none(grid: GridSpec) -> None:
    return None


METRIC_FAMILIES: dict[str, Callable[..., MetricField]] = {
    "flat": flat_metric,
    "conformal-bump": conformal_bump_metric,
    "random-smooth": random_smooth_metric,
}

H_FAMILIES: dict[str, Callable[..., Optional[ThreeFormField]]] = {
    "none": _h_none,
    "constant": _h_constant,
    "single-mode": _h_single_mode,
}

SCALAR_FAMILIES: dict[str, Callable[..., ScalarField]] = {
    "constant": constant_scalar,
    "single-mode": single_mode,
}
