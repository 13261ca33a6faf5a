import logging
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from ..geometry import (
    GridSpec,
    MetricField,
    ShapeError,
    SymTensorField,
    ThreeFormField,
)

logger = logging.getLogger("flow")

__all__ = ["FlowState", "Trajectory", "TimeSeries", "frozen_trajectory"]


class TimeSeries(NamedTuple):
    """Scalar values sampled at snapshot times."""

    times: np.ndarray
    values: np.ndarray

    def sup(self) -> float:
        """Largest absolute value, 0 for an empty series."""
        if len(self.values) == 0:
            return 0.0
        return float(np.max(np.abs(self.values)))

    def argsup(self) -> float:
        return float(self.times[int(np.argmax(np.abs(self.values)))])


@dataclass(frozen=True, eq=False)
class FlowState:
    """
    The instantaneous state ``(g, H, t)`` of the generalized Ricci flow.

    ``H`` is ``None`` when no 3-form is carried: always in dimension 2,
    and for pure Ricci flow in dimension 3.
    """

    g: MetricField
    H: Optional[ThreeFormField] = None
    t: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "t", float(self.t))
        if not math.isfinite(self.t) or self.t < 0:
            raise ValueError(f"flow time must be finite and nonnegative, got {self.t}")
        if self.H is not None and self.H.grid != self.g.grid:
            raise ShapeError("metric and 3-form live on different grids")

    @property
    def grid(self) -> GridSpec:
        return self.g.grid

    @property
    def has_h(self) -> bool:
        return self.H is not None

    def pack(self) -> np.ndarray:
        """The state as one array, metric upper triangle then the H coefficient."""
        if self.H is None:
            return np.array(self.g.base.upper)
        return np.concatenate([self.g.base.upper, self.H.phi[..., None]], axis=-1)

    @classmethod
    def unpack(cls, grid: GridSpec, y: np.ndarray, t: float, has_h: bool) -> "FlowState":
        m = grid.dim * (grid.dim + 1) // 2
        g = MetricField(SymTensorField(grid, y[..., :m]))
        H = ThreeFormField.from_values(grid, y[..., m]) if has_h else None
        return cls(g, H, t)

    def with_time(self, t: float) -> "FlowState":
        return FlowState(self.g, self.H, t)


def _hermite(t0, t1, y0, y1, m0, m1, t):
    dt = t1 - t0
    s = (t - t0) / dt
    s2 = s * s
    s3 = s2 * s
    return (
        (2 * s3 - 3 * s2 + 1) * y0
        + (s3 - 2 * s2 + s) * dt * m0
        + (-2 * s3 + 3 * s2) * y1
        + (s3 - s2) * dt * m1
    )


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    The sampled solution of the flow on ``[0, horizon]``.

    :param states: snapshots with strictly increasing times, starting at 0
    :param step_sizes: internal step sizes that produced the snapshots
    :param horizon: final time; equals the time of the last snapshot
    :param rates: packed time derivative of each snapshot, used for cubic
                  Hermite interpolation between snapshots. Omit for a
                  piecewise linear interpolant.
    """

    states: tuple[FlowState, ...]
    step_sizes: tuple[float, ...]
    horizon: float
    rates: Optional[tuple[np.ndarray, ...]] = None

    def __post_init__(self) -> None:
        states = tuple(self.states)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "step_sizes", tuple(float(d) for d in self.step_sizes))
        object.__setattr__(self, "horizon", float(self.horizon))

        if not states:
            raise ValueError("a trajectory needs at least one snapshot")
        times = np.array([s.t for s in states])
        if times[0] != 0.0:
            raise ValueError(f"trajectory must start at t = 0, starts at {times[0]}")
        if np.any(np.diff(times) <= 0):
            raise ValueError("snapshot times must be strictly increasing")
        if not math.isclose(times[-1], self.horizon, rel_tol=1e-12, abs_tol=1e-15):
            raise ValueError(
                f"last snapshot at t = {times[-1]} does not match horizon {self.horizon}"
            )
        if any(d <= 0 for d in self.step_sizes):
            raise ValueError("step sizes must be positive")
        grid = states[0].grid
        has_h = states[0].has_h
        for s in states:
            if s.grid != grid:
                raise ShapeError("all snapshots must share one grid")
            if s.has_h != has_h:
                raise ValueError("either every snapshot carries H or none does")
        if self.rates is not None:
            rates = tuple(np.asarray(r, dtype=float) for r in self.rates)
            if len(rates) != len(states):
                raise ValueError("one rate per snapshot is required")
            object.__setattr__(self, "rates", rates)
        times.setflags(write=False)
        object.__setattr__(self, "_times", times)

    def __len__(self) -> int:
        return len(self.states)

    def __getitem__(self, k: int) -> FlowState:
        return self.states[k]

    def __iter__(self):
        return iter(self.states)

    @property
    def times(self) -> np.ndarray:
        return self._times

    @property
    def grid(self) -> GridSpec:
        return self.states[0].grid

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def has_h(self) -> bool:
        return self.states[0].has_h

    @property
    def output_spacing(self) -> float:
        """Largest gap between consecutive snapshots."""
        if len(self) < 2:
            return 0.0
        return float(np.max(np.diff(self.times)))

    @property
    def max_step(self) -> float:
        return max(self.step_sizes, default=0.0)

    def nearest_index(self, t: float) -> int:
        return int(np.argmin(np.abs(self.times - t)))

    def packed_at(self, t: float) -> np.ndarray:
        """Packed state at any ``t`` in ``[0, horizon]``."""
        times = self.times
        if t < -1e-14 or t > self.horizon * (1 + 1e-12) + 1e-15:
            raise ValueError(f"t = {t} lies outside [0, {self.horizon}]")
        k = int(np.searchsorted(times, t, side="right")) - 1
        k = min(max(k, 0), len(times) - 1)
        if k == len(times) - 1 or t == times[k]:
            return self.states[k].pack()
        y0 = self.states[k].pack()
        y1 = self.states[k + 1].pack()
        if self.rates is None:
            s = (t - times[k]) / (times[k + 1] - times[k])
            return (1 - s) * y0 + s * y1
        return _hermite(times[k], times[k + 1], y0, y1, self.rates[k], self.rates[k + 1], t)

    def state_at(self, t: float) -> FlowState:
        return FlowState.unpack(self.grid, self.packed_at(t), max(t, 0.0), self.has_h)

    def metric_at(self, t: float) -> MetricField:
        return self.state_at(t).g

    def subsample(self, stride: int) -> "Trajectory":
        """Every ``stride``-th snapshot; the last snapshot is always kept."""
        if stride < 1:
            raise ValueError("stride must be positive")
        idx = list(range(0, len(self), stride))
        if idx[-1] != len(self) - 1:
            idx.append(len(self) - 1)
        rates = None if self.rates is None else tuple(self.rates[k] for k in idx)
        return Trajectory(
            tuple(self.states[k] for k in idx), self.step_sizes, self.horizon, rates
        )

    def metadata(self) -> dict:
        return {
            "grid": self.grid.as_dict(),
            "snapshots": len(self),
            "horizon": self.horizon,
            "internal_steps": len(self.step_sizes),
            "max_step": self.max_step,
            "has_h": self.has_h,
        }


def frozen_trajectory(
    g: MetricField,
    times: Iterable[float],
    H: Optional[ThreeFormField] = None,
) -> Trajectory:
    """
    A trajectory whose metric and 3-form never change.

    Used to pose heat problems on a static background.
    """
    times: Sequence[float] = [float(t) for t in times]
    states = tuple(FlowState(g, H, t) for t in times)
    zero = np.zeros_like(states[0].pack())
    steps = tuple(np.diff(times)) if len(times) > 1 else ()
    return Trajectory(states, steps, times[-1], tuple(zero for _ in states))
