"""
Trajectory exchange format.

A trajectory is written as one JSON document::

    {
      "format": "grflow-trajectory",
      "version": 1,
      "grid": {"dim": 3, "points": [...], "sides": [...], "order": 2},
      "horizon": T,
      "step_sizes": [...],
      "snapshots": [
        {"t": t, "g": [...], "phi": [...] or null, "dg": [...], "dphi": [...] or null},
        ...
      ],
      "evolutions": {"<name>": {"direction": "forward", "times": [...], "values": [[...], ...]}}
    }

Every array is flattened in row-major order over the grid axes followed by
any component axis. ``g`` holds the metric upper triangle in
``numpy.triu_indices`` order, so its trailing length is ``d (d + 1) / 2``.
"""

import json
from typing import Mapping, Optional

import numpy as np

from ..geometry import GridSpec
from ..misc import jsonio
from .state import FlowState, Trajectory

FORMAT = "grflow-trajectory"
VERSION = 1


def _flat(a: Optional[np.ndarray]):
    return None if a is None else np.ascontiguousarray(a).ravel().tolist()


def trajectory_to_dict(traj: Trajectory, evolutions: Mapping[str, object] = None) -> dict:
    """
    :param evolutions: scalar evolutions on ``traj`` keyed by name; any
                       object with ``direction``, ``times`` and ``values``
    """
    m = traj.dim * (traj.dim + 1) // 2
    snapshots = []
    for k, s in enumerate(traj.states):
        rate = None if traj.rates is None else traj.rates[k]
        snapshots.append(
            {
                "t": s.t,
                "g": _flat(s.g.base.upper),
                "phi": _flat(s.H.phi) if s.H is not None else None,
                "dg": _flat(None if rate is None else rate[..., :m]),
                "dphi": _flat(None if rate is None or not s.has_h else rate[..., m]),
            }
        )
    out = {
        "format": FORMAT,
        "version": VERSION,
        "grid": traj.grid.as_dict(),
        "horizon": traj.horizon,
        "step_sizes": list(traj.step_sizes),
        "snapshots": snapshots,
    }
    if evolutions:
        out["evolutions"] = {
            name: {
                "direction": getattr(ev.direction, "value", ev.direction),
                "times": list(ev.times),
                "values": [_flat(v) for v in ev.values],
            }
            for name, ev in evolutions.items()
        }
    return out


def trajectory_from_dict(data: dict) -> Trajectory:
    if data.get("format") != FORMAT:
        raise ValueError(f"not a trajectory document (format {data.get('format')!r})")
    if data.get("version") != VERSION:
        raise ValueError(f"unsupported trajectory version {data.get('version')!r}")
    gd = data["grid"]
    grid = GridSpec(gd["dim"], tuple(gd["points"]), tuple(gd["sides"]), gd.get("order", 2))
    m = grid.dim * (grid.dim + 1) // 2

    states = []
    rates = []
    for snap in data["snapshots"]:
        upper = np.asarray(snap["g"], dtype=float).reshape(grid.shape + (m,))
        has_h = snap["phi"] is not None
        parts = [upper]
        if has_h:
            parts.append(np.asarray(snap["phi"], dtype=float).reshape(grid.shape + (1,)))
        y = np.concatenate(parts, axis=-1)
        states.append(FlowState.unpack(grid, y, snap["t"], has_h))
        if snap.get("dg") is None:
            rates = None
        elif rates is not None:
            r = [np.asarray(snap["dg"], dtype=float).reshape(grid.shape + (m,))]
            if has_h:
                r.append(np.asarray(snap["dphi"], dtype=float).reshape(grid.shape + (1,)))
            rates.append(np.concatenate(r, axis=-1))

    return Trajectory(
        tuple(states),
        tuple(data["step_sizes"]),
        data["horizon"],
        None if rates is None else tuple(rates),
    )


def save_trajectory(path, traj: Trajectory, evolutions: Mapping[str, object] = None) -> None:
    jsonio.write(path, trajectory_to_dict(traj, evolutions), indent=1)


def load_trajectory(path) -> Trajectory:
    with open(path, encoding="utf-8") as fp:
        return trajectory_from_dict(json.load(fp))
