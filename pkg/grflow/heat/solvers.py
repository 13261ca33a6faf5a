import enum
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..flow.engine import stability_ceiling
from ..flow.integrators import rk4_step, substeps
from ..flow.state import TimeSeries, Trajectory
from ..geometry import ScalarField, divergence_form
from ..geometry.operators import metric_weights
from ..misc import progress_logger

logger = logging.getLogger("heat")
progress = progress_logger("heat")

__all__ = [
    "Direction",
    "ScalarEvolution",
    "WeightedMeasure",
    "SolverInstabilityError",
    "HorizonError",
    "solve_heat",
    "solve_conjugate",
    "gaussian_terminal",
    "weighted_measure",
    "mass_series",
    "measure_evolution_residual",
    "duality_series",
]

#: Allowed deviation of the weighted measure from unit mass.
MASS_TOLERANCE = 1e-6


class SolverInstabilityError(RuntimeError):
    pass


class HorizonError(ValueError):
    pass


class Direction(enum.Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


@dataclass(frozen=True, eq=False)
class ScalarEvolution:
    """
    A scalar field per snapshot of a trajectory.

    ``values[k]`` belongs to ``traj.times[k]``; an evolution may stop before
    the last snapshot (the conjugate kernel ends at its terminal time).

    :param positive: enforce strict positivity of every value
    """

    traj: Trajectory
    values: np.ndarray
    direction: Direction
    positive: bool = True

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim != self.traj.dim + 1 or values.shape[1:] != self.traj.grid.shape:
            raise ValueError(f"values of shape {values.shape} do not fit the trajectory grid")
        if not 1 <= len(values) <= len(self.traj):
            raise ValueError("an evolution needs between 1 and len(traj) snapshots")
        if not np.all(np.isfinite(values)):
            raise ValueError("evolution has non-finite values")
        if self.positive and not np.all(values > 0):
            raise ValueError("evolution must stay positive")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def times(self) -> np.ndarray:
        return self.traj.times[: len(self.values)]

    def field(self, k: int) -> ScalarField:
        return ScalarField(self.traj.grid, self.values[k])

    def time_derivative(self, values: Optional[np.ndarray] = None) -> np.ndarray:
        """
        Second order differences in time, one-sided at both ends.

        :param values: a stack aligned with :attr:`times`; defaults to the
                       evolution itself
        """
        values = self.values if values is None else values
        if len(values) < 3:
            raise ValueError("time derivatives need at least 3 snapshots")
        return np.gradient(values, self.times, axis=0, edge_order=2)


@dataclass(frozen=True, eq=False)
class WeightedMeasure:
    """``dmu = K dV_g``, stored as the density against coordinate cells."""

    traj: Trajectory
    density: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.traj.times[: len(self.density)]

    def __len__(self) -> int:
        return len(self.density)

    def mass(self, k: int) -> float:
        return float(np.sum(self.density[k]) * self.traj.grid.cell_volume)

    def integrate(self, k: int, f: np.ndarray) -> float:
        """``integral f dmu`` at snapshot ``k``."""
        return float(np.sum(f * self.density[k]) * self.traj.grid.cell_volume)


class _Coefficients:
    """Divergence-form weights of ``g(t)``, cached per stage time."""

    def __init__(self, traj: Trajectory) -> None:
        self.traj = traj
        self._cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def __call__(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        hit = self._cache.get(t)
        if hit is None:
            g = self.traj.metric_at(t)
            hit = (metric_weights(g), g.sqrt_det)
            if len(self._cache) > 8:
                self._cache.clear()
            self._cache[t] = hit
        return hit


def _ceiling(traj: Trajectory, k0: int, k1: int, cfl: float) -> float:
    return min(stability_ceiling(traj[k0].g, cfl), stability_ceiling(traj[k1].g, cfl))


def solve_heat(traj: Trajectory, u0: ScalarField, cfl: float = 0.2) -> ScalarEvolution:
    """
    Solves ``du/dt = Laplacian_g(t) u`` forward along the trajectory.

    Between snapshots the solution is sub-stepped with the classical
    Runge-Kutta scheme; the metric at stage times comes from the
    trajectory's interpolant.

    :raises SolverInstabilityError: if u stops being positive
    """
    if u0.grid != traj.grid:
        raise ValueError("initial data lives on another grid")
    if not u0.min() > 0:
        raise ValueError("initial data for the heat equation must be positive")

    grid = traj.grid
    coeffs = _Coefficients(traj)

    def rhs(t: float, u: np.ndarray) -> np.ndarray:
        A, vol = coeffs(t)
        return divergence_form(grid, A, u) / vol

    u = np.array(u0.values)
    out = [u]
    times = traj.times
    nsub = 0
    for k in range(len(times) - 1):
        n, dt = substeps(times[k + 1] - times[k], _ceiling(traj, k, k + 1, cfl))
        t = times[k]
        for i in range(n):
            u = rk4_step(u, t, dt, rhs)
            t = times[k] + (i + 1) * dt
        nsub += n
        if not u.min() > 0:
            raise SolverInstabilityError(
                f"heat solution lost positivity at t = {times[k + 1]:.6g} "
                f"(min {u.min():.3e}); reduce the step constant"
            )
        out.append(u)
        progress.info("heat: t=%.6g of %.6g", times[k + 1], times[-1])

    logger.debug("forward heat solve used %d substeps", nsub)
    return ScalarEvolution(traj, np.stack(out), Direction.FORWARD)


def gaussian_terminal(traj: Trajectory, index: int, width: float = 3.0, center=None) -> ScalarField:
    """
    A periodic Gaussian bump ``width`` grid cells wide, at unit mass for the
    metric of snapshot ``index``.
    """
    grid = traj.grid
    if center is None:
        center = tuple(0.5 * s for s in grid.sides)
    coords = grid.coordinates()
    r2 = np.zeros(grid.shape)
    for a in range(grid.dim):
        d = coords[a] - center[a]
        d = d - grid.sides[a] * np.round(d / grid.sides[a])
        r2 += d * d
    sigma = width * grid.min_spacing
    profile = np.exp(-r2 / (2 * sigma * sigma))
    # floor the tails so the backward solve stays positive
    profile = np.maximum(profile, 1e-6)
    mass = np.sum(profile * traj[index].g.sqrt_det) * grid.cell_volume
    return ScalarField(grid, profile / mass)


def solve_conjugate(
    traj: Trajectory,
    terminal: Optional[ScalarField] = None,
    t_prime: Optional[float] = None,
    width: float = 3.0,
    cfl: float = 0.2,
) -> tuple[ScalarEvolution, ScalarEvolution]:
    """
    Solves the conjugate heat equation
    ``dK/dt = -Laplacian K + R K - tr_g(H^2) K / 4`` backward from ``t_prime``.

    The unknown is the density ``rho = K sqrt(G)``, which obeys
    ``d rho / dt = -L_A(rho / sqrt(G))`` with the divergence-form operator;
    its coordinate integral is conserved exactly.

    :param terminal: K at ``t_prime``, rescaled to unit mass; a narrow
                     Gaussian when omitted
    :param t_prime: terminal time, snapped to the nearest snapshot; defaults
                    to the second to last snapshot
    :param width: Gaussian width in grid cells
    :returns: ``(kernel, potential)``; the potential
              ``f = -ln K - n/2 ln(4 pi (t' - t))`` stops one snapshot short
              of ``t_prime``
    :raises HorizonError: unless ``0 < t_prime < T``
    """
    times = traj.times
    if len(times) < 3:
        raise HorizonError("the conjugate solve needs at least 3 snapshots")
    if t_prime is None:
        kp = len(times) - 2
    else:
        if not 0 < t_prime < traj.horizon:
            raise HorizonError(
                f"terminal time {t_prime} must lie strictly inside (0, {traj.horizon})"
            )
        kp = traj.nearest_index(t_prime)
        if kp == len(times) - 1:
            kp -= 1
        if kp == 0:
            kp = 1
        if not math.isclose(times[kp], t_prime, rel_tol=1e-9):
            logger.info("terminal time %.6g snapped to snapshot t=%.6g", t_prime, times[kp])

    grid = traj.grid
    g_term = traj[kp].g
    if terminal is None:
        terminal = gaussian_terminal(traj, kp, width)
    else:
        if terminal.grid != grid:
            raise ValueError("terminal data lives on another grid")
        if not terminal.min() > 0:
            raise ValueError("terminal data for the conjugate equation must be positive")
        mass = np.sum(terminal.values * g_term.sqrt_det) * grid.cell_volume
        if abs(mass - 1) > MASS_TOLERANCE:
            logger.info("terminal datum rescaled from mass %.6g to 1", mass)
        terminal = ScalarField(grid, terminal.values / mass)

    coeffs = _Coefficients(traj)
    tp = times[kp]

    # tau = t' - t runs forward
    def rhs(tau: float, rho: np.ndarray) -> np.ndarray:
        A, vol = coeffs(tp - tau)
        return divergence_form(grid, A, rho / vol)

    rho = terminal.values * g_term.sqrt_det
    densities = [rho]
    for k in range(kp, 0, -1):
        interval = times[k] - times[k - 1]
        n, dt = substeps(interval, _ceiling(traj, k - 1, k, cfl))
        tau = tp - times[k]
        for i in range(n):
            rho = rk4_step(rho, tau, dt, rhs)
            tau = tp - times[k] + (i + 1) * dt
        if not rho.min() > 0:
            raise SolverInstabilityError(
                f"conjugate kernel lost positivity at t = {times[k - 1]:.6g} "
                f"(min {rho.min():.3e}); widen the terminal datum or reduce the step constant"
            )
        densities.append(rho)
        progress.info("conjugate: t=%.6g down to 0", times[k - 1])

    densities.reverse()
    K = np.stack([d / traj[k].g.sqrt_det for k, d in enumerate(densities)])
    kernel = ScalarEvolution(traj, K, Direction.BACKWARD)

    n = grid.dim
    lead = (n / 2) * np.log(4 * np.pi * (tp - times[:kp]))
    f = -np.log(K[:kp]) - lead.reshape((-1,) + (1,) * n)
    potential = ScalarEvolution(traj, f, Direction.BACKWARD, positive=False)

    drift = abs(np.sum(densities[0]) * grid.cell_volume - 1)
    logger.info(
        "conjugate kernel from t'=%.6g: %d snapshots, mass drift %.3e", tp, kp + 1, drift
    )
    return kernel, potential


def weighted_measure(kernel: ScalarEvolution) -> WeightedMeasure:
    """
    ``K sqrt(G)`` per snapshot, renormalized once so the terminal snapshot
    has unit mass. Drift at earlier times is left visible.
    """
    traj = kernel.traj
    density = np.stack([kernel.values[k] * traj[k].g.sqrt_det for k in range(len(kernel))])
    mass = np.sum(density[-1]) * traj.grid.cell_volume
    density = density / mass
    density.setflags(write=False)
    mu = WeightedMeasure(traj, density)
    drift = max(abs(mu.mass(k) - 1) for k in range(len(mu)))
    if drift > MASS_TOLERANCE:
        logger.warning("weighted measure drifts from unit mass by %.3e", drift)
    return mu


def mass_series(mu: WeightedMeasure) -> TimeSeries:
    return TimeSeries(mu.times, np.array([mu.mass(k) for k in range(len(mu))]))


def measure_evolution_residual(mu: WeightedMeasure) -> TimeSeries:
    """
    Sup-norm residual of ``d(dmu)/dt = -(Laplacian K / K) dmu`` per snapshot.

    In density form this reads ``d rho / dt + L_A(K) = 0``; the time
    derivative uses second order differences of the snapshots.
    """
    if len(mu) < 3:
        raise ValueError("the measure evolution needs at least 3 snapshots")
    traj = mu.traj
    grid = traj.grid
    drho = np.gradient(mu.density, mu.times, axis=0, edge_order=2)
    res = np.empty(len(mu))
    for k in range(len(mu)):
        g = traj[k].g
        K = mu.density[k] / g.sqrt_det
        res[k] = np.max(np.abs(drho[k] + divergence_form(grid, metric_weights(g), K)))
    return TimeSeries(mu.times, res)


def duality_series(u: ScalarEvolution, kernel: ScalarEvolution) -> TimeSeries:
    """``integral u K dV_g`` on the common snapshots; constant for exact solutions."""
    if u.traj is not kernel.traj:
        raise ValueError("both evolutions must live on the same trajectory")
    traj = u.traj
    n = min(len(u), len(kernel))
    pairing = np.array(
        [
            np.sum(u.values[k] * kernel.values[k] * traj[k].g.sqrt_det) * traj.grid.cell_volume
            for k in range(n)
        ]
    )
    return TimeSeries(traj.times[:n], pairing)
