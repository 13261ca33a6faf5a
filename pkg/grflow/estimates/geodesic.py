import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage, optimize

from ..geometry import GridSpec, MetricField

logger = logging.getLogger("estimates")

__all__ = ["GeodesicError", "GeodesicPath", "MetricInterpolant", "geodesic", "path_energy"]


class GeodesicError(RuntimeError):
    def __init__(self, message: str, gradient_norm: float) -> None:
        self.gradient_norm = float(gradient_norm)
        super().__init__(f"{message} (final gradient norm {self.gradient_norm:.3e})")


class MetricInterpolant:
    """
    Periodic cubic spline interpolation of a metric's components.

    The spline coefficients are computed once; evaluation at arbitrary
    coordinates goes through :func:`scipy.ndimage.map_coordinates`.
    """

    def __init__(self, upper: np.ndarray, grid: GridSpec) -> None:
        self.grid = grid
        self._coeffs = [
            ndimage.spline_filter(upper[..., m], order=3, mode="grid-wrap")
            for m in range(upper.shape[-1])
        ]
        self._i, self._j = np.triu_indices(grid.dim)

    @classmethod
    def of(cls, g: MetricField) -> "MetricInterpolant":
        return cls(np.asarray(g.base.upper), g.grid)

    def upper(self, points: np.ndarray) -> np.ndarray:
        """Upper triangle at ``points`` of shape ``(P, d)``, returns ``(P, m)``."""
        idx = (np.asarray(points, dtype=float) / np.asarray(self.grid.spacing)).T
        return np.stack(
            [
                ndimage.map_coordinates(c, idx, order=3, mode="grid-wrap", prefilter=False)
                for c in self._coeffs
            ],
            axis=-1,
        )

    def matrix(self, points: np.ndarray) -> np.ndarray:
        return self.matrix_from_upper(self.upper(points))

    def matrix_from_upper(self, upper: np.ndarray) -> np.ndarray:
        d = self.grid.dim
        out = np.empty(upper.shape[:-1] + (d, d))
        out[..., self._i, self._j] = upper
        out[..., self._j, self._i] = upper
        return out


def path_energy(metric: MetricInterpolant, points: np.ndarray) -> float:
    """``sum g(dgamma, dgamma) / ds`` with the metric taken at segment midpoints."""
    seg = np.diff(points, axis=0)
    G = metric.matrix(0.5 * (points[1:] + points[:-1]))
    return float(len(seg) * np.einsum("pi,pij,pj->", seg, G, seg))


def _path_length(metric: MetricInterpolant, points: np.ndarray) -> float:
    seg = np.diff(points, axis=0)
    G = metric.matrix(0.5 * (points[1:] + points[:-1]))
    return float(np.sum(np.sqrt(np.einsum("pi,pij,pj->p", seg, G, seg))))


@dataclass(frozen=True, eq=False)
class GeodesicPath:
    """
    A discrete stationary path of the energy from ``y`` (s = 0) to ``x`` (s = 1).

    ``points`` are unwrapped coordinates, so the last one may be a periodic
    image of ``x``.
    """

    x: tuple[float, ...]
    y: tuple[float, ...]
    points: np.ndarray
    energy: float
    length: float
    metric_time: Optional[float] = None

    @property
    def s(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, len(self.points))

    def velocity(self) -> np.ndarray:
        """``gamma'(s)`` at every sample."""
        return np.gradient(self.points, self.s, axis=0, edge_order=2)


def geodesic(
    g: MetricField,
    x: Sequence[float],
    y: Sequence[float],
    samples: int = 50,
    max_iter: int = 500,
    metric_time: Optional[float] = None,
    interpolant: Optional[MetricInterpolant] = None,
) -> GeodesicPath:
    """
    Minimizes the discrete path energy over the interior samples with
    L-BFGS-B, starting from the shortest straight segment among the
    periodic images of ``x``.

    :param samples: number of segments
    :raises GeodesicError: if the optimizer stops away from a stationary path
    """
    grid = g.grid
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    disp = grid.wrap(x - y)
    if np.allclose(disp, 0.0, atol=1e-14):
        raise ValueError("geodesic endpoints coincide")
    if samples < 2:
        raise ValueError("a geodesic needs at least 2 segments")

    metric = interpolant if interpolant is not None else MetricInterpolant.of(g)
    s = np.linspace(0.0, 1.0, samples + 1)
    start = y + s[:, None] * disp
    d = grid.dim

    def energy(z: np.ndarray) -> float:
        pts = start.copy()
        pts[1:-1] = z.reshape(-1, d)
        return path_energy(metric, pts)

    e0 = path_energy(metric, start)
    res = optimize.minimize(
        energy,
        start[1:-1].ravel(),
        method="L-BFGS-B",
        options={"maxiter": max_iter, "ftol": 1e-14, "gtol": 1e-9},
    )
    gnorm = float(np.max(np.abs(res.jac))) if res.jac is not None else 0.0
    if not res.success and gnorm > 1e-3 * (1.0 + e0):
        raise GeodesicError(f"geodesic search stopped: {res.message}", gnorm)

    points = start.copy()
    points[1:-1] = res.x.reshape(-1, d)
    if res.fun > e0:
        points = start
    path = GeodesicPath(
        tuple(x),
        tuple(y),
        points,
        path_energy(metric, points),
        _path_length(metric, points),
        metric_time,
    )
    logger.debug(
        "geodesic %s -> %s: energy %.6g (straight %.6g), %d iterations",
        tuple(y), tuple(x), path.energy, e0, res.nit,
    )
    return path
