"""
Output files of a run::

    <out>/report.json         verdicts, slacks, locations and scalar feedback
    <out>/series/<name>.csv   plot-ready columns
    <out>/trajectory.json     the snapshots (and the heat and kernel evolutions)

Numbers are written with 17 significant digits and JSON keys are sorted,
so a rerun with the same scenario and seed produces the same bytes.
"""

import logging
import os
import re
from collections.abc import Mapping

import numpy as np

from grflow.flow import save_trajectory
from grflow.misc import jsonio

from .laboratory import GridLaboratory, HomogeneousLaboratory, Laboratory, RunReport

logger = logging.getLogger("laboratory")

CSV_FORMAT = "%.17g"

HOMOGENEOUS_FORMAT = "grflow-homogeneous"


def slug(name: str) -> str:
    """``liyau[alpha=2]`` -> ``liyau_alpha_2``"""
    return re.sub(r"[^a-z0-9.]+", "_", name.lower()).strip("_")


def write_csv(path: str, columns: Mapping[str, np.ndarray]) -> None:
    """
    :raises ValueError: if the columns differ in length
    """
    names = list(columns)
    data = [np.asarray(columns[n], dtype=float).ravel() for n in names]
    lengths = {len(d) for d in data}
    if len(lengths) != 1:
        raise ValueError(f"columns of {os.path.basename(path)} differ in length: {sorted(lengths)}")
    np.savetxt(
        path,
        np.column_stack(data),
        fmt=CSV_FORMAT,
        delimiter=",",
        header=",".join(names),
        comments="",
    )


def _ordered(columns: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
    keys = sorted(columns)
    if "t" in columns:
        keys.remove("t")
        keys.insert(0, "t")
    return {k: columns[k] for k in keys}


def series_tables(report: RunReport) -> dict[str, dict[str, np.ndarray]]:
    """
    CSV tables keyed by file stem: one per check from its array feedback,
    one per mapping-of-arrays feedback, and one per estimate carrying series.
    """
    tables: dict[str, dict[str, np.ndarray]] = {}
    for cname, values in sorted(report.feedback.items()):
        arrays = {}
        for key, value in values.items():
            if isinstance(value, np.ndarray):
                if value.size:
                    arrays[key] = value
            elif isinstance(value, Mapping) and value and all(
                isinstance(v, np.ndarray) for v in value.values()
            ):
                tables[f"{cname}_{slug(key)}"] = dict(value)
        if arrays:
            tables[cname] = _ordered(arrays)
    for r in report.reports:
        if r.series:
            tables[slug(r.check)] = dict(r.series)
    return tables


def write_trajectory(lab: Laboratory, path: str) -> bool:
    """
    Writes the products of ``lab`` as ``trajectory.json``.

    :returns: False if the laboratory produced no trajectory
    """
    if isinstance(lab, GridLaboratory) and hasattr(lab, "traj"):
        evolutions = {}
        if hasattr(lab, "u"):
            evolutions["heat"] = lab.u
        if hasattr(lab, "kernel"):
            evolutions["kernel"] = lab.kernel
        save_trajectory(path, lab.traj, evolutions)
        return True
    if isinstance(lab, HomogeneousLaboratory) and hasattr(lab, "states"):
        jsonio.write(
            path,
            {
                "format": HOMOGENEOUS_FORMAT,
                "version": 1,
                "group": lab.scenario["homogeneous"]["group"],
                "states": [s.as_dict() for s in lab.states],
            },
            indent=1,
        )
        return True
    return False


def write_run(lab: Laboratory, report: RunReport, out: str, trajectory: bool = True) -> None:
    os.makedirs(os.path.join(out, "series"), exist_ok=True)
    jsonio.write(os.path.join(out, "report.json"), report.as_dict())
    for stem, columns in series_tables(report).items():
        write_csv(os.path.join(out, "series", f"{stem}.csv"), columns)
    if trajectory and not write_trajectory(lab, os.path.join(out, "trajectory.json")):
        logger.warning("no trajectory to write for %s", report.scenario)
    logger.info("outputs written to %s", out)
