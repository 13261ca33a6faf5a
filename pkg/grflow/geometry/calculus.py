"""
Periodic finite differences on point-first arrays.

Arrays carry the grid axes first and any tensor slots after them, so a
difference along grid axis ``a`` is a roll along array axis ``a``.
"""

import numpy as np

from .grid import GridSpec


def diff(f: np.ndarray, axis: int, h: float, order: int = 2) -> np.ndarray:
    """Centered first derivative along one grid axis."""
    if order == 2:
        return (np.roll(f, -1, axis) - np.roll(f, 1, axis)) / (2.0 * h)
    return (
        -np.roll(f, -2, axis)
        + 8.0 * np.roll(f, -1, axis)
        - 8.0 * np.roll(f, 1, axis)
        + np.roll(f, 2, axis)
    ) / (12.0 * h)


def diff2(f: np.ndarray, axis: int, h: float, order: int = 2) -> np.ndarray:
    """Compact centered second derivative along one grid axis."""
    if order == 2:
        return (np.roll(f, -1, axis) - 2.0 * f + np.roll(f, 1, axis)) / (h * h)
    return (
        -np.roll(f, -2, axis)
        + 16.0 * np.roll(f, -1, axis)
        - 30.0 * f
        + 16.0 * np.roll(f, 1, axis)
        - np.roll(f, 2, axis)
    ) / (12.0 * h * h)


def partials(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    """
    All first partials of a point-first array.

    The derivative index is inserted right after the grid axes, so for
    ``f[..., i, j]`` the result is ``df[..., k, i, j] = d_k f_ij``.
    """
    d = grid.dim
    return np.stack(
        [diff(f, a, grid.spacing[a], grid.order) for a in range(d)], axis=d
    )


def second_partials(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    """
    Matrix of second partials of a scalar array, ``[..., i, j]``.

    The diagonal uses the compact three-point stencil; mixed partials
    compose two centered differences.
    """
    d = grid.dim
    h = grid.spacing
    out = np.empty(grid.shape + (d, d))
    for i in range(d):
        out[..., i, i] = diff2(f, i, h[i], grid.order)
        di = diff(f, i, h[i], grid.order)
        for j in range(i + 1, d):
            out[..., i, j] = out[..., j, i] = diff(di, j, h[j], grid.order)
    return out


def forward(f: np.ndarray, axis: int, h: float, order: int = 2) -> np.ndarray:
    """Derivative at the face between point ``i`` and ``i + 1``."""
    if order == 2:
        return (np.roll(f, -1, axis) - f) / h
    return (
        np.roll(f, 1, axis)
        - 27.0 * f
        + 27.0 * np.roll(f, -1, axis)
        - np.roll(f, -2, axis)
    ) / (24.0 * h)


def backward(f: np.ndarray, axis: int, h: float, order: int = 2) -> np.ndarray:
    """
    Derivative at point ``i`` of face values, ``f[i]`` being the value at
    the face between ``i`` and ``i + 1``. Minus the adjoint of
    :func:`forward` at the same order.
    """
    if order == 2:
        return (f - np.roll(f, 1, axis)) / h
    return (
        np.roll(f, 2, axis)
        - 27.0 * np.roll(f, 1, axis)
        + 27.0 * f
        - np.roll(f, -1, axis)
    ) / (24.0 * h)


def face_average(f: np.ndarray, axis: int, order: int = 2) -> np.ndarray:
    """Value at the face between point ``i`` and ``i + 1``."""
    if order == 2:
        return 0.5 * (f + np.roll(f, -1, axis))
    return (
        -np.roll(f, 1, axis)
        + 9.0 * f
        + 9.0 * np.roll(f, -1, axis)
        - np.roll(f, -2, axis)
    ) / 16.0


def coordinate_integral(grid: GridSpec, values: np.ndarray) -> float:
    """Sum over the grid times the coordinate cell volume."""
    return float(np.sum(values) * grid.cell_volume)
