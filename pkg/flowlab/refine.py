"""
Refinement studies: rerun a scenario with the grid spacing and the snapshot
spacing halved per level and fit the observed order of every identity
residual.
"""

import logging
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from grflow.misc import jsonio

from .laboratory import NUMERICAL_FAILURES, laboratory_for
from .reporting import slug, write_csv
from .scenario import Scenario
from .watchdog import SimpleWatchdog

logger = logging.getLogger("laboratory")

#: Checks that only slow a refinement study down
_DISABLED_FOR_REFINEMENT = {
    "estimates.harnack.enabled": False,
    "frequency.eigenvalues": False,
}


@dataclass
class ConvergenceTable:
    """
    Residuals per refinement level and the least-squares slope of
    ``log residual`` against ``log h`` per residual.

    :param partial: the study stopped early; see the log for the reason
    """

    scenario: str
    rows: list = field(default_factory=list)
    orders: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)
    partial: bool = False

    @property
    def names(self) -> list[str]:
        names: set[str] = set()
        for row in self.rows:
            names.update(row["residuals"])
        return sorted(names)

    def columns(self) -> dict[str, np.ndarray]:
        cols = {
            "level": np.array([r["level"] for r in self.rows], dtype=float),
            "h": np.array([r["h"] for r in self.rows]),
            "dt": np.array([r["dt"] for r in self.rows]),
        }
        for name in self.names:
            cols[name] = np.array([r["residuals"].get(name, math.nan) for r in self.rows])
        return cols

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "partial": self.partial,
            "orders": self.orders,
            "notes": self.notes,
            "levels": self.rows,
        }

    def format(self) -> list[str]:
        """The table as printable lines."""
        names = self.names
        lines = ["level  " + "h".ljust(12) + "dt".ljust(12) + "".join(n[:22].ljust(24) for n in names)]
        for r in self.rows:
            lines.append(
                f"{r['level']:<7d}{r['h']:<12.4e}{r['dt']:<12.4e}"
                + "".join(f"{r['residuals'].get(n, math.nan):<24.6e}" for n in names)
            )
        order_cells = []
        for n in names:
            o = self.orders.get(n)
            order_cells.append((self.notes.get(n, "n/a") if o is None else f"{o:.3f}").ljust(24))
        lines.append("order".ljust(31) + "".join(order_cells))
        return lines

    def write(self, out: str) -> None:
        os.makedirs(out, exist_ok=True)
        write_csv(os.path.join(out, "convergence.csv"), self.columns())
        jsonio.write(os.path.join(out, "convergence.json"), self.as_dict())


def observed_order(h: np.ndarray, residual: np.ndarray) -> Optional[float]:
    """Slope of ``log residual`` against ``log h``; None unless every residual is positive."""
    h = np.asarray(h, dtype=float)
    residual = np.asarray(residual, dtype=float)
    if len(h) < 2 or not np.all(residual > 0) or not np.all(np.isfinite(residual)):
        return None
    slope, _ = np.polyfit(np.log(h), np.log(residual), 1)
    return float(slope)


def _residuals(report) -> dict[str, float]:
    return {
        slug(r.check): float(r.details["residual"])
        for r in report.reports
        if "residual" in r.details
    }


def refine(scenario: Scenario, levels: int) -> ConvergenceTable:
    """
    Runs ``scenario`` at refinement levels ``0 .. levels - 1``, sequentially.

    A numerical failure or an exhausted ``control.timeout`` ends the study
    with a partial table.
    """
    if levels < 2:
        raise ValueError(f"a refinement study needs at least 2 levels, got {levels}")
    table = ConvergenceTable(scenario.name)

    if scenario.backend == "homogeneous":
        # no spatial grid: every level is the same ODE solve
        report = laboratory_for(scenario).run()
        residuals = _residuals(report)
        hom = scenario["homogeneous"]
        dt = hom["horizon"] / (hom["snapshots"] - 1)
        for level in range(levels):
            table.rows.append({"level": level, "h": 0.0, "dt": dt, "residuals": residuals})
        for name in residuals:
            table.orders[name] = None
            table.notes[name] = "exact (no spatial grid)"
        table.partial = report.failure is not None
        return table

    watchdog = SimpleWatchdog(scenario["control"]["timeout"])
    watchdog.reset()
    base = scenario.with_overrides(**_DISABLED_FOR_REFINEMENT)
    for level in range(levels):
        if watchdog.isExpired():
            logger.warning(
                "time budget of %.0fs used up before level %d; the table is partial",
                watchdog.getTimeout(), level,
            )
            table.partial = True
            break
        sc = base.refined(level)
        logger.info("refinement level %d: %d points per side", level, sc["geometry"]["points"])
        try:
            report = laboratory_for(sc).run()
        except NUMERICAL_FAILURES as e:
            logger.warning("level %d failed (%s); the table is partial", level, e)
            table.partial = True
            break
        if report.failure is not None:
            logger.warning("level %d failed (%s); the table is partial", level, report.failure["message"])
            table.partial = True
            break
        grid = sc.grid()
        table.rows.append(
            {
                "level": level,
                "h": max(grid.spacing),
                "dt": sc.horizon / sc["control"]["cadence"],
                "residuals": _residuals(report),
            }
        )
        watchdog.addEpoch(f"level {level}")

    cols = table.columns()
    for name in table.names:
        values = cols[name]
        if np.all(values == 0):
            table.orders[name] = None
            table.notes[name] = "exact"
            continue
        table.orders[name] = observed_order(cols["h"], values)
        if table.orders[name] is None:
            table.notes[name] = "not enough levels" if len(values) < 2 else "mixed zero residuals"
    watchdog.printEpochs()
    return table
