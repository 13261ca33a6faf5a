"""
Li-Yau type gradient estimate for positive heat solutions along the flow::

    |grad u|^2 / u^2 - alpha u_t / u
        <= sqrt(n alpha / 2a) [ (sqrt(n alpha / 2a) + sqrt(B2)) / t + sqrt(B3 / t) + sqrt(B1) ]
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..flow.diagnostics import CurvatureBounds
from ..geometry import scalar_calculus
from ..heat.solvers import ScalarEvolution
from .report import BUDGET_CONSTANT, EstimateReport, error_budget

logger = logging.getLogger("estimates")

__all__ = [
    "ParameterError",
    "LiYauParams",
    "LiYauConstants",
    "liyau_constants",
    "liyau_rhs",
    "ricci_flow_envelope",
    "balanced_envelope",
    "liyau_check",
]


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class LiYauParams:
    """
    :param alpha: must exceed 1
    :param a: positive, with ``a + 2b = 1 / alpha``
    :param b: positive
    """

    alpha: float = 2.0
    a: float = 0.25
    b: float = 0.125

    def __post_init__(self) -> None:
        if not self.alpha > 1:
            raise ParameterError(f"alpha must be greater than 1, got {self.alpha}")
        if not (self.a > 0 and self.b > 0):
            raise ParameterError(f"a and b must be positive, got a={self.a}, b={self.b}")
        if abs(self.a + 2 * self.b - 1 / self.alpha) > 1e-12:
            raise ParameterError(
                f"a + 2b must equal 1/alpha: {self.a} + 2*{self.b} != {1 / self.alpha}"
            )

    @classmethod
    def balanced(cls, alpha: float) -> "LiYauParams":
        """The choice ``a = 2b``, i.e. ``a = 1/(2 alpha)``, ``b = 1/(4 alpha)``."""
        if not alpha > 1:
            raise ParameterError(f"alpha must be greater than 1, got {alpha}")
        return cls(alpha, 1 / (2 * alpha), 1 / (4 * alpha))

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "a": self.a, "b": self.b}


@dataclass(frozen=True)
class LiYauConstants:
    B1: float
    B2: float
    B3: float


def liyau_constants(n: int, p: LiYauParams, kb: CurvatureBounds) -> LiYauConstants:
    al, a, b = p.alpha, p.a, p.b
    mixed = kb.K1 + (al - 1) * kb.K3 / (4 * al)
    B1 = n * al**3 / (512 * a * (al - 1) ** 2) + 3 * n * al * kb.K4**2 / 8
    B2 = (
        n * al**3 / (2 * a * (al - 1) ** 2) * mixed**2
        + n * al * kb.K / (2 * b)
        + n * al * kb.K3**2 / (32 * b)
    )
    B3 = n * al**3 / (16 * a * (al - 1) ** 2) * mixed
    return LiYauConstants(B1, B2, B3)


def liyau_rhs(n: int, p: LiYauParams, kb: CurvatureBounds, t):
    """The right hand side of the estimate at time(s) ``t > 0``."""
    c = liyau_constants(n, p, kb)
    s = math.sqrt(n * p.alpha / (2 * p.a))
    t = np.asarray(t, dtype=float)
    return s * ((s + math.sqrt(c.B2)) / t + math.sqrt(c.B3) / np.sqrt(t) + math.sqrt(c.B1))


def ricci_flow_envelope(n: int, p: LiYauParams, K: float, t):
    """
    The bound specialised to ``H = 0``::

        n alpha / (2 a t) + sqrt(n^2 alpha^4 / (4 a^2 (alpha-1)^2) + n^2 alpha^2 K / (4 a b)) / t
    """
    al, a, b = p.alpha, p.a, p.b
    t = np.asarray(t, dtype=float)
    root = math.sqrt(
        n * n * al**4 / (4 * a * a * (al - 1) ** 2) + n * n * al * al * K / (4 * a * b)
    )
    return n * al / (2 * a * t) + root / t


def balanced_envelope(n: int, alpha: float, kb: CurvatureBounds, t):
    """The bound written out for ``a = 2b = 1/(2 alpha)``."""
    al = alpha
    mixed = kb.K1 + (al - 1) * kb.K3 / (4 * al)
    t = np.asarray(t, dtype=float)
    const = math.sqrt(
        n * n * al**6 / (256 * (al - 1) ** 2) + 3 * n * n * al**3 * kb.K4**2 / 8
    )
    inv_t = math.sqrt(
        n * n * al**6 / (al - 1) ** 2 * mixed**2
        + 2 * n * n * al**4 * kb.K
        + n * n * al**4 * kb.K3**2 / 8
    )
    inv_sqrt_t = math.sqrt(n * n * al**6 / (8 * (al - 1) ** 2) * mixed)
    return n * al * al / t + const + inv_t / t + inv_sqrt_t / np.sqrt(t)


def liyau_lhs(u: ScalarEvolution, alpha: float) -> np.ndarray:
    """``|grad u|^2 / u^2 - alpha u_t / u`` at every snapshot and point."""
    ut = u.time_derivative()
    out = np.empty_like(u.values)
    for k in range(len(u)):
        g = u.traj[k].g
        sc = scalar_calculus(g, u.field(k))
        out[k] = sc.grad_sq.values / u.values[k] ** 2 - alpha * ut[k] / u.values[k]
    return out


def liyau_check(
    u: ScalarEvolution,
    p: LiYauParams,
    kb: CurvatureBounds,
    c_b: float = BUDGET_CONSTANT,
) -> EstimateReport:
    """
    Minimum over ``t > 0`` and grid points of RHS - LHS. Never raises on a
    violation; the verdict says what happened.
    """
    grid = u.traj.grid
    n = grid.dim
    times = u.times
    lhs = liyau_lhs(u, p.alpha)[1:]
    rhs = liyau_rhs(n, p, kb, times[1:])
    flat = lhs.reshape(len(lhs), -1)
    lhs_max = flat.max(axis=1)
    slack_t = rhs - lhs_max
    k = int(np.argmin(slack_t))
    worst = np.unravel_index(int(np.argmax(flat[k])), grid.shape)
    scale = max(abs(rhs[k]), float(np.abs(flat[k]).max()))
    budget = error_budget(max(grid.spacing), u.traj.output_spacing, scale, c_b)
    report = EstimateReport.from_slack(
        f"liyau[alpha={p.alpha:g}]",
        slack_t[k],
        {"t": float(times[k + 1]), "x": list(grid.point(worst))},
        budget,
        series={"t": times[1:], "lhs_max": lhs_max, "rhs": rhs},
        details={"params": p.as_dict()},
    )
    logger.info("%s: slack %.6g (budget %.3g) -> %s", report.check, report.slack, budget, report.verdict)
    return report
