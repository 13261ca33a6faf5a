import logging

import numpy as np

from ..geometry import scalar_calculus
from ..heat.solvers import ScalarEvolution
from .report import BUDGET_CONSTANT, EstimateReport, error_budget

logger = logging.getLogger("estimates")


def hamilton_quantity(u: ScalarEvolution) -> np.ndarray:
    """``P = t |grad u|^2 / u - u ln(A / u)`` with ``A = max u(., 0)``."""
    A = float(u.values[0].max())
    P = np.empty_like(u.values)
    for k, t in enumerate(u.times):
        uk = u.values[k]
        grad_sq = scalar_calculus(u.traj[k].g, u.field(k)).grad_sq.values
        P[k] = t * grad_sq / uk - uk * np.log(A / uk)
    return P


def hamilton_check(u: ScalarEvolution, c_b: float = BUDGET_CONSTANT) -> EstimateReport:
    """
    Checks ``|grad u|^2 <= (u^2 / t) ln(A / u)`` in the form ``sup P <= 0``.

    The slack is ``-sup P`` over ``t > 0``; the value of ``sup P`` at t = 0,
    which is never positive, is kept in the details.
    """
    grid = u.traj.grid
    P = hamilton_quantity(u)
    A = float(u.values[0].max())
    initial = float(P[0].max())

    rest = P[1:].reshape(len(P) - 1, -1)
    sup_t = rest.max(axis=1)
    k = int(np.argmax(sup_t))
    worst = np.unravel_index(int(np.argmax(rest[k])), grid.shape)
    scale = max(float(np.max(np.abs(u.values * np.log(A / u.values)))), float(np.abs(rest).max()))
    budget = error_budget(max(grid.spacing), u.traj.output_spacing, scale, c_b)
    report = EstimateReport.from_slack(
        "hamilton",
        -sup_t[k],
        {"t": float(u.times[k + 1]), "x": list(grid.point(worst))},
        budget,
        series={"t": u.times, "sup_P": np.concatenate([[initial], sup_t])},
        details={"A": A, "sup_P_initial": initial},
    )
    logger.info("hamilton: sup P %.6g (budget %.3g) -> %s", sup_t[k], budget, report.verdict)
    return report
