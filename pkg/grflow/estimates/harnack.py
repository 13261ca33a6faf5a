"""
Spacetime Harnack inequality obtained by integrating the Li-Yau bound along
a path::

    u(x, t1) <= u(y, t2) (t2 / t1)^(xi / alpha)
                exp{ int_0^1 alpha |gamma'|^2 / (4 (t2 - t1)) ds
                     + (2 / alpha) sqrt(n alpha B3 / 2a) (sqrt(t2) - sqrt(t1))
                     + ((t2 - t1) / alpha) sqrt(n alpha B1 / 2a) }
"""

import logging
import math
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, ndimage

from ..flow.diagnostics import CurvatureBounds
from ..misc import ordered_map
from ..heat.solvers import ScalarEvolution
from .geodesic import GeodesicPath, MetricInterpolant, geodesic
from .liyau import LiYauParams, liyau_constants
from .report import BUDGET_CONSTANT, EstimateReport, error_budget, worst_verdict

logger = logging.getLogger("estimates")

__all__ = ["TimeOrderError", "harnack_xi", "harnack_check", "harnack_sweep"]

ENVELOPES = ("general", "ricci_flow")


class TimeOrderError(ValueError):
    pass


def harnack_xi(n: int, p: LiYauParams, kb: CurvatureBounds, envelope: str = "general") -> float:
    """The exponent ``xi``; the ``ricci_flow`` envelope uses the ``H = 0`` form."""
    s2 = n * p.alpha / (2 * p.a)
    if envelope == "ricci_flow":
        al, a, b = p.alpha, p.a, p.b
        return s2 + math.sqrt(
            n * n * al**4 / (4 * a * a * (al - 1) ** 2) + n * n * al * al * kb.K / (4 * a * b)
        )
    if envelope != "general":
        raise ValueError(f"unknown envelope {envelope!r}, expected one of {ENVELOPES}")
    return s2 + math.sqrt(s2 * liyau_constants(n, p, kb).B2)


class _SnapshotSplines:
    """Spline coefficients of the metric and its rate, built once per snapshot."""

    def __init__(self, traj) -> None:
        self.traj = traj
        self._metric: dict[int, MetricInterpolant] = {}
        self._rate: dict[int, Optional[MetricInterpolant]] = {}

    def metric(self, k: int) -> MetricInterpolant:
        if k not in self._metric:
            self._metric[k] = MetricInterpolant.of(self.traj[k].g)
        return self._metric[k]

    def rate(self, k: int) -> Optional[MetricInterpolant]:
        if k not in self._rate:
            rates = self.traj.rates
            if rates is None:
                self._rate[k] = None
            else:
                m = self.traj.dim * (self.traj.dim + 1) // 2
                self._rate[k] = MetricInterpolant(rates[k][..., :m], self.traj.grid)
        return self._rate[k]

    def matrix_at(self, t: float, point: np.ndarray) -> np.ndarray:
        """``g(t)`` at one point, interpolated in time like the trajectory."""
        times = self.traj.times
        k = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 2))
        t0, t1 = times[k], times[k + 1]
        pt = np.asarray(point, dtype=float)[None, :]
        y0 = self.metric(k).upper(pt)[0]
        y1 = self.metric(k + 1).upper(pt)[0]
        r0, r1 = self.rate(k), self.rate(k + 1)
        dt = t1 - t0
        s = (t - t0) / dt
        if r0 is None:
            up = (1 - s) * y0 + s * y1
        else:
            m0 = r0.upper(pt)[0]
            m1 = r1.upper(pt)[0]
            up = (
                (2 * s**3 - 3 * s**2 + 1) * y0
                + (s**3 - 2 * s**2 + s) * dt * m0
                + (-2 * s**3 + 3 * s**2) * y1
                + (s**3 - s**2) * dt * m1
            )
        return self.metric(k).matrix_from_upper(up)


def _value_at(u: ScalarEvolution, point: Sequence[float], t: float) -> float:
    """u at a point and time: periodic cubic spline in space, linear in time."""
    grid = u.traj.grid
    times = u.times
    idx = (np.asarray(point, dtype=float) / np.asarray(grid.spacing))[:, None]
    k = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 2))
    s = (t - times[k]) / (times[k + 1] - times[k])

    def at(j: int) -> float:
        return float(ndimage.map_coordinates(u.values[j], idx, order=3, mode="grid-wrap")[0])

    if s <= 0:
        return at(k)
    return (1 - s) * at(k) + s * at(k + 1)


def _path_action(
    path: Optional[GeodesicPath], splines: _SnapshotSplines, t1: float, t2: float
) -> float:
    """``int_0^1 |gamma'(s)|^2`` with the length taken at ``(1 - s) t2 + s t1``."""
    if path is None:
        return 0.0
    vel = path.velocity()
    s = path.s
    speed_sq = np.empty(len(s))
    for i, si in enumerate(s):
        G = splines.matrix_at((1 - si) * t2 + si * t1, path.points[i])
        speed_sq[i] = vel[i] @ G @ vel[i]
    return float(integrate.trapezoid(speed_sq, s))


def harnack_check(
    u: ScalarEvolution,
    x: Sequence[float],
    t1: float,
    y: Sequence[float],
    t2: float,
    p: LiYauParams,
    kb: CurvatureBounds,
    samples: int = 50,
    envelope: str = "general",
    c_b: float = BUDGET_CONSTANT,
    _splines: Optional[_SnapshotSplines] = None,
) -> EstimateReport:
    """
    Slack ``RHS - u(x, t1)`` of the Harnack inequality for one spacetime pair.

    The path is stationary for the metric at ``(t1 + t2) / 2``; its speed is
    then measured at the time the inequality attaches to each path sample.

    :param envelope: ``"general"``, or ``"ricci_flow"`` for the ``H = 0``
                     exponent without the B1 and B3 terms
    :raises TimeOrderError: unless ``0 < t1 < t2 <= T``
    """
    traj = u.traj
    if not 0 < t1 < t2 <= u.times[-1] * (1 + 1e-12):
        raise TimeOrderError(f"need 0 < t1 < t2 <= {u.times[-1]}, got t1={t1}, t2={t2}")
    if envelope not in ENVELOPES:
        raise ValueError(f"unknown envelope {envelope!r}, expected one of {ENVELOPES}")

    grid = traj.grid
    n = grid.dim
    splines = _splines if _splines is not None else _SnapshotSplines(traj)

    tmid = 0.5 * (t1 + t2)
    if np.allclose(grid.wrap(np.subtract(x, y)), 0.0, atol=1e-14):
        path = None
    else:
        path = geodesic(traj.metric_at(tmid), x, y, samples, metric_time=tmid)
    action = _path_action(path, splines, t1, t2)

    xi = harnack_xi(n, p, kb, envelope)
    exponent = p.alpha * action / (4 * (t2 - t1))
    if envelope == "general":
        c = liyau_constants(n, p, kb)
        s2 = n * p.alpha / (2 * p.a)
        exponent += (2 / p.alpha) * math.sqrt(s2 * c.B3) * (math.sqrt(t2) - math.sqrt(t1))
        exponent += (t2 - t1) / p.alpha * math.sqrt(s2 * c.B1)

    lhs = _value_at(u, x, t1)
    rhs = _value_at(u, y, t2) * (t2 / t1) ** (xi / p.alpha) * math.exp(exponent)
    budget = error_budget(max(grid.spacing), traj.output_spacing, rhs, c_b)
    return EstimateReport.from_slack(
        f"harnack[{envelope}]",
        rhs - lhs,
        {"x": list(map(float, x)), "t1": float(t1), "y": list(map(float, y)), "t2": float(t2)},
        budget,
        details={"lhs": lhs, "rhs": rhs, "action": action, "xi": xi},
    )


def harnack_sweep(
    u: ScalarEvolution,
    p: LiYauParams,
    kb: CurvatureBounds,
    pairs: int = 50,
    seed: int = 0,
    samples: int = 50,
    envelope: str = "general",
    c_b: float = BUDGET_CONSTANT,
) -> EstimateReport:
    """
    Runs :func:`harnack_check` on ``pairs`` seeded spacetime pairs (grid
    points and snapshot times) and reports the worst one.
    """
    grid = u.traj.grid
    rng = np.random.default_rng(seed)
    nt = len(u)
    if nt < 3:
        raise ValueError("the Harnack sweep needs at least 3 snapshots")
    draws = []
    for _ in range(pairs):
        xi = tuple(int(i) for i in rng.integers(0, grid.points))
        yi = tuple(int(i) for i in rng.integers(0, grid.points))
        k1, k2 = sorted(rng.choice(np.arange(1, nt), size=2, replace=False))
        draws.append((grid.point(xi), float(u.times[k1]), grid.point(yi), float(u.times[k2])))

    splines = _SnapshotSplines(u.traj)
    for k in range(nt):
        splines.metric(k)
        splines.rate(k)

    reports = ordered_map(
        lambda d: harnack_check(
            u, d[0], d[1], d[2], d[3], p, kb, samples, envelope, c_b, _splines=splines
        ),
        draws,
    )
    worst = min(reports, key=lambda r: (r.slack + r.budget, r.slack))
    relative = [r.slack / r.details["rhs"] for r in reports]
    report = EstimateReport.from_slack(
        f"harnack[{envelope},alpha={p.alpha:g}]",
        worst.slack,
        worst.location,
        worst.budget,
        series={
            "t1": np.array([r.location["t1"] for r in reports]),
            "t2": np.array([r.location["t2"] for r in reports]),
            "slack": np.array([r.slack for r in reports]),
            "relative_slack": np.array(relative),
        },
        details={
            "pairs": pairs,
            "seed": seed,
            "worst_verdict": str(worst_verdict([r.verdict for r in reports])),
        },
    )
    logger.info(
        "%s: %d pairs, worst slack %.6g (budget %.3g) -> %s",
        report.check, pairs, report.slack, report.budget, report.verdict,
    )
    return report
