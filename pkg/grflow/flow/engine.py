import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..geometry import (
    DegenerateMetricError,
    MetricField,
    SymTensorField,
    ThreeFormField,
    hform_ops,
    ricci,
)
from ..misc import progress_logger
from .integrators import rk4_step, substeps
from .state import FlowState, Trajectory

logger = logging.getLogger("flow")
progress = progress_logger("flow")

__all__ = [
    "StepSizeError",
    "SingularityError",
    "StepBudgetError",
    "StepControl",
    "grf_rhs",
    "stability_ceiling",
    "step",
    "evolve",
]


class StepSizeError(ValueError):
    pass


class SingularityError(RuntimeError):
    """
    The metric stopped being positive definite.

    :param t: time of the failed step
    :param location: grid coordinates of the offending point
    :param trajectory: snapshots computed before the failure, when raised
                       from :func:`evolve`
    """

    def __init__(self, t: float, location, eigenvalue: float, trajectory: Optional[Trajectory] = None):
        self.t = float(t)
        self.location = tuple(location)
        self.eigenvalue = float(eigenvalue)
        self.trajectory = trajectory
        super().__init__(
            f"metric degenerated near t = {self.t:.6g} at x = {self.location} "
            f"(smallest eigenvalue {self.eigenvalue:.3e})"
        )


class StepBudgetError(RuntimeError):
    """
    More internal steps were needed than :class:`StepControl` allows.

    :param steps: the step budget that ran out
    :param t: time reached when the budget ran out
    :param trajectory: snapshots computed before the budget ran out
    """

    def __init__(self, steps: int, t: float, trajectory: Optional[Trajectory] = None):
        self.steps = int(steps)
        self.t = float(t)
        self.trajectory = trajectory
        super().__init__(f"more than {self.steps} internal steps, stopped at t = {self.t:.6g}")


@dataclass(frozen=True)
class StepControl:
    """
    Time stepping knobs for :func:`evolve`.

    :param cfl: the constant ``c`` of the stability ceiling
    :param cadence: number of output intervals on ``[0, T]``
    :param max_steps: abort after this many internal steps
    :param freeze_metric: evolve H only, holding g fixed
    """

    cfl: float = 0.2
    cadence: int = 64
    max_steps: int = 1_000_000
    freeze_metric: bool = False

    def __post_init__(self) -> None:
        if not 0 < self.cfl <= 1:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.cadence < 1:
            raise ValueError(f"cadence must be positive, got {self.cadence}")


def grf_rhs(s: FlowState) -> tuple[SymTensorField, Optional[ThreeFormField]]:
    """
    Right hand side of the generalized Ricci flow.

    ``dg = -2 Ric + H^2 / 2`` and ``dH = -dd* H``. Without H this is the
    Ricci flow and the second entry is ``None``.
    """
    grid = s.grid
    ric, _ = ricci(s.g)
    dg = -2.0 * ric.upper
    if s.H is None:
        return SymTensorField(grid, dg), None
    ops = hform_ops(s.g, s.H)
    dg = dg + 0.5 * ops.h_sq.upper
    return SymTensorField(grid, dg), ThreeFormField.from_values(grid, -ops.dd_star.phi)


def stability_ceiling(g: MetricField, cfl: float = 0.2) -> float:
    """
    Largest admissible explicit step, ``cfl * h_min^2 * lambda_min(g)``.

    This is the same number as ``cfl * h_min^2 / lambda_max(g^-1)``: the top
    of the discrete Laplacian spectrum scales with the largest eigenvalue of
    ``g^-1``, which is ``1 / lambda_min(g)``, so no inverse is formed. At
    fourth order the staggered stencil of the divergence form reaches
    ``(7/6)^2`` times further along the negative axis than the three point
    stencil, so the ceiling shrinks by 36/49.
    """
    grid = g.grid
    ceiling = cfl * grid.min_spacing**2 * g.min_eigenvalue
    if grid.order == 4:
        ceiling *= 36 / 49
    return ceiling


def _packed_rhs(grid, has_h: bool, freeze_metric: bool):
    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        s = FlowState.unpack(grid, y, max(t, 0.0), has_h)
        dg, dH = grf_rhs(s)
        out = np.zeros_like(y)
        m = dg.upper.shape[-1]
        if not freeze_metric:
            out[..., :m] = dg.upper
        if dH is not None:
            out[..., m] = dH.phi
        return out

    return rhs


def _raise_singular(grid, t: float, e: DegenerateMetricError, trajectory=None):
    raise SingularityError(t, grid.point(e.index), e.eigenvalue, trajectory) from e


def step(
    s: FlowState, dt: float, cfl: float = 0.2, freeze_metric: bool = False
) -> FlowState:
    """
    Advances the state by one classical Runge-Kutta step.

    :raises StepSizeError: if ``dt`` exceeds :func:`stability_ceiling`
    :raises SingularityError: if a stage or the result is not positive definite
    """
    if not dt > 0:
        raise StepSizeError(f"step size must be positive, got {dt}")
    ceiling = stability_ceiling(s.g, cfl)
    if dt > ceiling * (1 + 1e-9):
        raise StepSizeError(
            f"dt = {dt:.6g} exceeds the stability ceiling {ceiling:.6g} at t = {s.t:.6g}"
        )
    return _step_unchecked(s, dt, freeze_metric)


def _step_unchecked(s: FlowState, dt: float, freeze_metric: bool) -> FlowState:
    rhs = _packed_rhs(s.grid, s.has_h, freeze_metric)
    try:
        y = rk4_step(s.pack(), s.t, dt, rhs)
        return FlowState.unpack(s.grid, y, s.t + dt, s.has_h)
    except DegenerateMetricError as e:
        _raise_singular(s.grid, s.t, e)


def _rate(s: FlowState, freeze_metric: bool) -> np.ndarray:
    return _packed_rhs(s.grid, s.has_h, freeze_metric)(s.t, s.pack())


def evolve(s0: FlowState, T: float, ctrl: StepControl = StepControl()) -> Trajectory:
    """
    Integrates the flow from ``s0`` (taken at t = 0) to ``T``.

    Snapshots are stored at ``ctrl.cadence`` uniform output times. Between
    them the internal step adapts to the current stability ceiling and is
    shortened to land exactly on each output time.

    :raises SingularityError: with the partial trajectory attached
    """
    if not T > 0:
        raise ValueError(f"horizon must be positive, got {T}")

    s = s0.with_time(0.0)
    targets = np.linspace(0.0, T, ctrl.cadence + 1)
    states = [s]
    rates = [_rate(s, ctrl.freeze_metric)]
    steps: list[float] = []

    logger.info(
        "evolving %s grid to T=%.6g (%d snapshots, cfl %.3g%s)",
        "x".join(map(str, s.grid.points)),
        T,
        ctrl.cadence + 1,
        ctrl.cfl,
        ", metric frozen" if ctrl.freeze_metric else "",
    )

    for target in targets[1:]:
        while not math.isclose(s.t, target, rel_tol=1e-12, abs_tol=1e-15) and s.t < target:
            ceiling = stability_ceiling(s.g, ctrl.cfl)
            _, dt = substeps(target - s.t, ceiling)
            try:
                s = _step_unchecked(s, dt, ctrl.freeze_metric)
            except SingularityError as e:
                partial = Trajectory(tuple(states), tuple(steps), states[-1].t, tuple(rates))
                logger.error("flow stopped: %s", e)
                raise SingularityError(e.t, e.location, e.eigenvalue, partial) from e
            steps.append(dt)
            if len(steps) > ctrl.max_steps:
                partial = Trajectory(tuple(states), tuple(steps), states[-1].t, tuple(rates))
                logger.error("flow stopped at t=%.6g: step budget of %d exhausted", s.t, ctrl.max_steps)
                raise StepBudgetError(ctrl.max_steps, s.t, partial)
        s = s.with_time(float(target))
        states.append(s)
        rates.append(_rate(s, ctrl.freeze_metric))
        progress.info("t=%.6g of %.6g, %d internal steps", s.t, T, len(steps))

    logger.info("reached T=%.6g in %d internal steps (max dt %.3g)", T, len(steps), max(steps))
    return Trajectory(tuple(states), tuple(steps), float(targets[-1]), tuple(rates))
