"""
Parabolic frequency of a positive heat solution against the conjugate
heat kernel measure::

    I(t) = int u^2 dmu
    D(t) = h(t) int |grad u|^2 dmu
    U(t) = exp(E(t)) D(t) / I(t)

Spatial sums use the same discrete Dirichlet density as the heat solver,
so ``I' = -2 D / h`` holds up to the time discretization only.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import integrate

from ..flow.state import TimeSeries
from ..geometry import divergence_form
from ..geometry.operators import gradient_energy, metric_weights
from ..heat.solvers import ScalarEvolution, WeightedMeasure
from ..estimates.report import BUDGET_CONSTANT, EstimateReport, error_budget
from .params import FrequencyConstants, FrequencyParams, WindowError

logger = logging.getLogger("frequency")

__all__ = [
    "FrequencySeries",
    "window_indices",
    "compute_series",
    "monotonicity_check",
    "i_prime_identity",
    "integral_harnack_check",
    "hamilton_energy_check",
]

#: Relative tolerance when matching window ends to snapshot times.
SNAP_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class FrequencySeries:
    """Frequency quantities at the snapshots inside the window."""

    times: np.ndarray
    I: np.ndarray
    D: np.ndarray
    E: np.ndarray
    U: np.ndarray
    beta: np.ndarray
    h: np.ndarray
    hprime_over_h: np.ndarray
    grad_sq_mass: np.ndarray
    laplace_sq_mass: np.ndarray
    constants: FrequencyConstants
    spacing: float
    dt: float
    lambda_M: Optional[np.ndarray] = field(default=None)

    def __len__(self) -> int:
        return len(self.times)

    def with_eigenvalues(self, lam: np.ndarray) -> "FrequencySeries":
        lam = np.asarray(lam, dtype=float)
        if lam.shape != self.times.shape:
            raise ValueError(f"expected {len(self.times)} eigenvalues, got {lam.shape}")
        return replace(self, lambda_M=lam)

    def columns(self) -> dict[str, np.ndarray]:
        """Plot-ready columns in output order."""
        cols = {
            "t": self.times,
            "I": self.I,
            "D": self.D,
            "E": self.E,
            "U": self.U,
            "beta": self.beta,
        }
        if self.lambda_M is not None:
            cols["lambda_M"] = self.lambda_M
        cols["h"] = self.h
        cols["hprime_over_h"] = self.hprime_over_h
        cols["grad_sq_mass"] = self.grad_sq_mass
        cols["laplace_sq_mass"] = self.laplace_sq_mass
        return cols


def window_indices(times: np.ndarray, p: FrequencyParams) -> np.ndarray:
    """
    Indices of the snapshots in ``[t0, t1]``.

    :raises WindowError: if the window reaches past the data or holds fewer
        than two snapshots
    """
    times = np.asarray(times)
    tol = SNAP_TOLERANCE * max(abs(times[-1]), 1.0)
    if p.t1 > times[-1] + tol:
        raise WindowError(
            f"window end t1={p.t1} lies beyond the last available snapshot t={times[-1]}"
        )
    idx = np.flatnonzero((times >= p.t0 - tol) & (times <= p.t1 + tol))
    if len(idx) < 2:
        raise WindowError(
            f"window [{p.t0}, {p.t1}] holds {len(idx)} snapshot(s); at least 2 are needed"
        )
    if abs(times[idx[0]] - p.t0) > tol or abs(times[idx[-1]] - p.t1) > tol:
        logger.info(
            "window [%.6g, %.6g] snapped to snapshots [%.6g, %.6g]",
            p.t0, p.t1, times[idx[0]], times[idx[-1]],
        )
    return idx


def _exponent(times: np.ndarray, p: FrequencyParams, fc: FrequencyConstants) -> np.ndarray:
    # Simpson on each interval, with the integrand evaluated at the midpoint
    a = times[:-1]
    b = times[1:]
    f = lambda s: fc.exponent_integrand(p.h, s)  # noqa: E731
    pieces = (b - a) / 6 * (f(a) + 4 * f(0.5 * (a + b)) + f(b))
    return -np.concatenate([[0.0], np.cumsum(pieces)])


def compute_series(
    u: ScalarEvolution,
    mu: WeightedMeasure,
    p: FrequencyParams,
    fc: FrequencyConstants,
) -> FrequencySeries:
    """
    :raises WindowError: if the window is not covered by both ``u`` and ``mu``
    """
    traj = u.traj
    if mu.traj is not traj:
        raise ValueError("the heat solution and the measure must share a trajectory")
    grid = traj.grid
    n = min(len(u), len(mu))
    idx = window_indices(traj.times[:n], p)
    times = traj.times[idx]

    I = np.empty(len(idx))
    grad_sq = np.empty(len(idx))
    lap_sq = np.empty(len(idx))
    for j, k in enumerate(idx):
        g = traj[k].g
        A = metric_weights(g)
        rho = mu.density[k]
        K = rho / g.sqrt_det
        v = u.values[k]
        I[j] = np.sum(v * v * rho) * grid.cell_volume
        grad_sq[j] = np.sum(K * gradient_energy(grid, A, v)) * grid.cell_volume
        lap = divergence_form(grid, A, v) / g.sqrt_det
        lap_sq[j] = np.sum(lap * lap * rho) * grid.cell_volume

    h = p.h(times)
    D = h * grad_sq
    E = _exponent(times, p, fc)
    beta = np.exp(E)
    U = beta * D / I
    series = FrequencySeries(
        times,
        I,
        D,
        E,
        U,
        beta,
        h,
        p.h.log_derivative(times),
        grad_sq,
        lap_sq,
        fc,
        max(grid.spacing),
        traj.output_spacing,
    )
    logger.info(
        "frequency on [%.6g, %.6g]: %d snapshots, U from %.6g to %.6g",
        times[0], times[-1], len(times), U[0], U[-1],
    )
    return series


def monotonicity_check(
    s: FrequencySeries, p: FrequencyParams, c_b: float = BUDGET_CONSTANT
) -> EstimateReport:
    """
    ``U`` must increase where ``h < 0`` and decrease where ``h > 0``; the
    slack is the worst successive difference taken with that sign.
    """
    return _monotone_report("frequency_monotonicity", s.times, s.U, p.sign, s, c_b)


def _monotone_report(check, times, values, sign, s: FrequencySeries, c_b) -> EstimateReport:
    steps = np.diff(values) * (1 if sign < 0 else -1)
    k = int(np.argmin(steps))
    scale = float(np.max(np.abs(values)))
    budget = error_budget(s.spacing, s.dt, scale, c_b)
    report = EstimateReport.from_slack(
        check,
        steps[k],
        {"t": float(times[k]), "t_next": float(times[k + 1])},
        budget,
        series={"t": times[1:], "difference": np.diff(values)},
        details={"direction": "increasing" if sign < 0 else "decreasing"},
    )
    logger.info("%s: slack %.6g (budget %.3g) -> %s", check, report.slack, budget, report.verdict)
    return report


def i_prime_identity(s: FrequencySeries, p: FrequencyParams) -> TimeSeries:
    """``|dI/dt + 2 D / h|`` at the interior window snapshots."""
    if len(s) < 3:
        raise WindowError("the identity needs at least 3 snapshots in the window")
    dI = np.gradient(s.I, s.times, edge_order=2)
    res = np.abs(dI + 2 * s.D / s.h)
    return TimeSeries(s.times[1:-1], res[1:-1])


def integral_harnack_check(
    s: FrequencySeries, p: FrequencyParams, c_b: float = BUDGET_CONSTANT
) -> EstimateReport:
    """Slack of ``I(t1) >= exp(2 U(t0) int -1/(h beta) dt) I(t0)``."""
    weight = -1.0 / (s.h * s.beta)
    integral = float(integrate.simpson(weight, x=s.times))
    bound = math.exp(2 * s.U[0] * integral) * s.I[0]
    slack = s.I[-1] - bound
    budget = error_budget(s.spacing, s.dt, s.I[-1], c_b)
    report = EstimateReport.from_slack(
        "integral_harnack",
        slack,
        {"t0": float(s.times[0]), "t1": float(s.times[-1])},
        budget,
        details={"I_t0": float(s.I[0]), "I_t1": float(s.I[-1]), "bound": bound, "integral": integral},
    )
    logger.info("integral Harnack: slack %.6g (budget %.3g) -> %s", slack, budget, report.verdict)
    return report


def hamilton_energy_check(s: FrequencySeries, c_b: float = BUDGET_CONSTANT) -> EstimateReport:
    """
    The integrated gradient bound ``int |grad u|^2 dmu <= c(t) I(t)`` that the
    monotonicity argument relies on.
    """
    bound = s.constants.c(s.times) * s.I
    slack_t = bound - s.grad_sq_mass
    k = int(np.argmin(slack_t))
    budget = error_budget(s.spacing, s.dt, float(np.max(bound)), c_b)
    report = EstimateReport.from_slack(
        "hamilton_energy",
        slack_t[k],
        {"t": float(s.times[k])},
        budget,
        series={"t": s.times, "grad_sq_mass": s.grad_sq_mass, "bound": bound},
    )
    logger.info("hamilton energy: slack %.6g (budget %.3g) -> %s", report.slack, budget, report.verdict)
    return report
