"""
The flow on a 3-dimensional unimodular Lie group with a left-invariant
metric that is diagonal in a Milnor frame,

    [e2, e3] = lambda1 e1,   [e3, e1] = lambda2 e2,   [e1, e2] = lambda3 e3,

and ``H = k e^1 ^ e^2 ^ e^3``. The metric is ``diag(a, b, c)`` in the dual
coframe. Everything here is exact; there is no spatial discretization.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..flow.integrators import rk4_step
from ..misc import progress_logger

logger = logging.getLogger("homogeneous")
progress = progress_logger("homogeneous")

__all__ = [
    "CollapseError",
    "MilnorState",
    "PRESETS",
    "structure_constants",
    "levi_civita_connection",
    "koszul_ricci",
    "milnor_ricci",
    "h_squared",
    "homogeneous_rhs",
    "bismut_flat_k",
    "evolve_ode",
    "integrate_fixed",
]

#: Structure constants ``(lambda1, lambda2, lambda3)`` of the Milnor frame.
PRESETS = {
    "su2": (2.0, 2.0, 2.0),
    "heisenberg": (2.0, 0.0, 0.0),
    "abelian": (0.0, 0.0, 0.0),
    "e2": (2.0, 2.0, 0.0),
    "sol": (2.0, -2.0, 0.0),
}

#: Smallest metric coefficient before the integration gives up.
COLLAPSE_FLOOR = 1e-8


class CollapseError(RuntimeError):
    """
    A metric coefficient reached the collapse floor.

    :param t: time of the last accepted state
    :param estimate: extrapolated time at which the coefficient vanishes
    :param states: the states accepted so far
    """

    def __init__(self, t: float, estimate: float, states: tuple) -> None:
        self.t = float(t)
        self.estimate = float(estimate)
        self.states = states
        super().__init__(
            f"metric collapses near t = {self.estimate:.10g} (last state at t = {self.t:.10g})"
        )


@dataclass(frozen=True)
class MilnorState:
    a: float
    b: float
    c: float
    lambda1: float
    lambda2: float
    lambda3: float
    k: float = 0.0
    t: float = 0.0

    def __post_init__(self) -> None:
        for name in ("a", "b", "c"):
            value = float(getattr(self, name))
            if not value > 0:
                raise ValueError(f"metric coefficient {name} must be positive, got {value}")
        for name in ("lambda1", "lambda2", "lambda3", "k", "t"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @classmethod
    def preset(cls, name: str, a=1.0, b=1.0, c=1.0, k=0.0) -> "MilnorState":
        try:
            lam = PRESETS[name]
        except KeyError:
            raise ValueError(f"unknown group {name!r}, expected one of {sorted(PRESETS)}") from None
        return cls(a, b, c, *lam, k=k)

    @property
    def metric(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c])

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([self.lambda1, self.lambda2, self.lambda3])

    @property
    def volume_density(self) -> float:
        return math.sqrt(self.a * self.b * self.c)

    def vector(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.k])

    def with_vector(self, y: np.ndarray, t: float) -> "MilnorState":
        return replace(self, a=float(y[0]), b=float(y[1]), c=float(y[2]), k=float(y[3]), t=float(t))

    def as_dict(self) -> dict:
        return {
            "t": self.t,
            "a": self.a,
            "b": self.b,
            "c": self.c,
            "k": self.k,
            "lambda": [self.lambda1, self.lambda2, self.lambda3],
        }


def structure_constants(s: MilnorState) -> np.ndarray:
    """``C[i, j, m]`` with ``[e_i, e_j] = C[i, j, m] e_m``."""
    C = np.zeros((3, 3, 3))
    lam = s.lambdas
    for i, j, m in ((1, 2, 0), (2, 0, 1), (0, 1, 2)):
        C[i, j, m] = lam[m]
        C[j, i, m] = -lam[m]
    return C


def levi_civita_connection(s: MilnorState) -> np.ndarray:
    """
    ``Gamma[i, j, m]`` with ``nabla_{e_i} e_j = Gamma[i, j, m] e_m``, from
    Koszul's formula for left-invariant fields::

        2 g(nabla_X Y, Z) = g([X, Y], Z) - g([Y, Z], X) + g([Z, X], Y)
    """
    C = structure_constants(s)
    g = np.diag(s.metric)
    lower = 0.5 * (
        np.einsum("ijm,mk->ijk", C, g)
        - np.einsum("jkm,mi->ijk", C, g)
        + np.einsum("kim,mj->ijk", C, g)
    )
    return np.einsum("ijk,km->ijm", lower, np.linalg.inv(g))


def koszul_ricci(s: MilnorState) -> np.ndarray:
    """
    Ricci tensor in the frame, brute force from the structure constants:
    ``R(X, Y) Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z``
    and ``Ric(Y, Z) = tr(X -> R(X, Y) Z)``.
    """
    G = levi_civita_connection(s)
    C = structure_constants(s)
    # R[i, j, k, l]: e_l component of R(e_i, e_j) e_k
    R = (
        np.einsum("jkm,iml->ijkl", G, G)
        - np.einsum("ikm,jml->ijkl", G, G)
        - np.einsum("ijm,mkl->ijkl", C, G)
    )
    ric = np.einsum("ijki->jk", R)
    return 0.5 * (ric + ric.T)


def _principal_ricci(metric: np.ndarray, lambdas: np.ndarray) -> np.ndarray:
    a, b, c = metric
    l1, l2, l3 = lambdas
    r1 = ((l1 * a) ** 2 - (l2 * b - l3 * c) ** 2) / (2 * b * c)
    r2 = ((l2 * b) ** 2 - (l3 * c - l1 * a) ** 2) / (2 * c * a)
    r3 = ((l3 * c) ** 2 - (l1 * a - l2 * b) ** 2) / (2 * a * b)
    return np.array([r1, r2, r3])


def milnor_ricci(s: MilnorState) -> tuple[float, float, float]:
    """Principal Ricci components ``Ric(e_i, e_i)`` in closed form."""
    r1, r2, r3 = _principal_ricci(s.metric, s.lambdas)
    return float(r1), float(r2), float(r3)


def _h_squared(metric: np.ndarray, k: float) -> np.ndarray:
    a, b, c = metric
    k2 = k * k
    return np.array([k2 / (b * c), k2 / (c * a), k2 / (a * b)])


def h_squared(s: MilnorState) -> np.ndarray:
    """Diagonal of ``H^2`` in the frame: ``(k^2 / bc, k^2 / ca, k^2 / ab)``."""
    return _h_squared(s.metric, s.k)


def homogeneous_rhs(s: MilnorState) -> np.ndarray:
    """
    ``(da, db, dc, dk)``. Since ``*H`` is a constant function on the group,
    ``d* H = 0`` and k does not move.
    """
    r = np.array(milnor_ricci(s))
    dg = -2 * r + 0.5 * h_squared(s)
    return np.append(dg, 0.0)


def bismut_flat_k(s: MilnorState, rtol: float = 1e-12) -> Optional[float]:
    """
    The ``k >= 0`` making the state stationary, if one exists: all three
    ``4 r_i g_jj g_kk`` must agree and be nonnegative.
    """
    r = np.array(milnor_ricci(s))
    a, b, c = s.metric
    k2 = 4 * r * np.array([b * c, c * a, a * b])
    scale = max(float(np.max(np.abs(k2))), 1.0)
    if k2.max() - k2.min() > rtol * scale or k2[0] < -rtol * scale:
        return None
    return math.sqrt(max(float(k2.mean()), 0.0))


def _rhs(t: float, y: np.ndarray, template: MilnorState) -> np.ndarray:
    # no MilnorState here: trial stages may leave the positive cone
    metric = y[:3]
    dg = -2 * _principal_ricci(metric, template.lambdas) + 0.5 * _h_squared(metric, y[3])
    return np.append(dg, 0.0)


def _collapse_estimate(s: MilnorState) -> float:
    y = s.metric
    dy = homogeneous_rhs(s)[:3]
    i = int(np.argmin(y))
    if dy[i] < 0:
        return s.t - y[i] / dy[i]
    return s.t


def integrate_fixed(s0: MilnorState, T: float, steps: int) -> MilnorState:
    """``steps`` equal RK4 steps from ``s0`` over a time ``T``."""
    dt = T / steps
    y = s0.vector()
    t = s0.t
    for i in range(steps):
        y = rk4_step(y, t, dt, lambda t, y: _rhs(t, y, s0))
        t = s0.t + (i + 1) * dt
    return s0.with_vector(y, t)


def evolve_ode(
    s0: MilnorState,
    T: float,
    snapshots: int = 65,
    tol: float = 1e-12,
    dt0: Optional[float] = None,
) -> tuple[MilnorState, ...]:
    """
    Integrates to ``s0.t + T`` with step-doubling RK4 and returns the states
    at ``snapshots`` equally spaced times.

    The local error of each step is estimated from one full step against
    two half steps; a step is accepted when the estimate is below
    ``tol * max(1, |y|)``.

    :raises CollapseError: if a, b or c falls below ``COLLAPSE_FLOOR`` or the
        step size underflows
    """
    if not T > 0:
        raise ValueError(f"the horizon must be positive, got {T}")
    if snapshots < 2:
        raise ValueError("at least 2 snapshots are needed")
    targets = s0.t + np.linspace(0.0, T, snapshots)
    dt = T / 64 if dt0 is None else dt0
    rhs = lambda t, y: _rhs(t, y, s0)  # noqa: E731

    y = s0.vector()
    t = s0.t
    out = [s0]
    accepted = rejected = 0
    for target in targets[1:]:
        while t < target:
            h = min(dt, target - t)
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                full = rk4_step(y, t, h, rhs)
                half = rk4_step(y, t, h / 2, rhs)
                half = rk4_step(half, t + h / 2, h / 2, rhs)
            err = float(np.max(np.abs(full - half))) / 15
            scale = max(1.0, float(np.max(np.abs(half))))
            if not np.all(np.isfinite(half)) or np.min(half[:3]) <= COLLAPSE_FLOOR:
                err = math.inf
            if err <= tol * scale:
                y = half + (half - full) / 15
                t = target if h == target - t else t + h
                accepted += 1
                grow = 2.0 if err == 0 else min(2.0, 0.9 * (tol * scale / err) ** 0.2)
                if h == dt:
                    dt = h * grow
            else:
                rejected += 1
                dt = h * (0.5 if not math.isfinite(err) else max(0.1, 0.9 * (tol * scale / err) ** 0.2))
            if dt < 1e-14 * T:
                last = s0.with_vector(y, t)
                raise CollapseError(t, _collapse_estimate(last), tuple(out))
        out.append(s0.with_vector(y, target))
        progress.info("homogeneous: t=%.6g of %.6g", target, targets[-1])

    logger.debug("ODE integration: %d steps accepted, %d rejected", accepted, rejected)
    return tuple(out)
