"""Explicit time stepping shared by the flow, heat and homogeneous solvers."""

import math
from typing import Callable, TypeVar

S = TypeVar("S")


def rk4_step(state: S, t: float, dt: float, rhs: Callable[[float, S], S]) -> S:
    """Take one step using 4th order Runge-Kutta."""
    k1 = rhs(t, state)
    k2 = rhs(t + dt / 2, state + dt / 2 * k1)
    k3 = rhs(t + dt / 2, state + dt / 2 * k2)
    k4 = rhs(t + dt, state + dt * k3)
    return state + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def substeps(interval: float, ceiling: float) -> tuple[int, float]:
    """
    Splits ``interval`` into the fewest equal steps no longer than ``ceiling``.

    :returns: (count, step size)
    """
    if interval <= 0:
        return 0, 0.0
    n = max(1, math.ceil(interval / ceiling * (1 - 1e-12)))
    return n, interval / n
