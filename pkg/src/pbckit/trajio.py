"""CSV form of a trajectory.

Columns: ``t,x1..xn,z1,z2..zm,u,y,Vp,mode,residual``. Numbers use the
shortest round-trip decimal form, so re-reading reproduces every sample
bit for bit. ``Vp`` and ``residual`` are blank when unavailable and a
diverged run ends with a ``# diverged t=...`` comment line.
"""
from __future__ import annotations

import csv
import io
import re
from pathlib import Path

import numpy as np

from .core import Trajectory
from .sector import BoundaryMode


def _num(value) -> str:
    value = float(value)
    return "" if np.isnan(value) else repr(value)


def header(n: int, m: int) -> list[str]:
    return (
        ["t"]
        + [f"x{i}" for i in range(1, n + 1)]
        + [f"z{i}" for i in range(1, m + 1)]
        + ["u", "y", "Vp", "mode", "residual"]
    )


def write_trajectory_csv(traj: Trajectory, target) -> None:
    """Write to a path or an open text stream."""
    if isinstance(target, (str, Path)):
        with open(target, "w", newline="") as fh:
            write_trajectory_csv(traj, fh)
        return
    n = traj.n_plant
    m = traj.xi.shape[1] - n
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(header(n, m))
    for i in range(len(traj)):
        vp = "" if traj.storage is None else _num(traj.storage[i])
        writer.writerow(
            [_num(traj.times[i])]
            + [_num(q) for q in traj.xi[i]]
            + [_num(traj.u[i]), _num(traj.y[i]), vp, BoundaryMode(int(traj.modes[i])).code,
               _num(traj.residual[i])]
        )
    if traj.diverged:
        target.write(f"# diverged t={traj.blowup_time!r}\n")


def read_trajectory_csv(source) -> Trajectory:
    text = Path(source).read_text() if isinstance(source, (str, Path)) else source.read()
    lines = text.splitlines()
    blowup = None
    body = []
    for line in lines:
        if line.startswith("#"):
            match = re.match(r"#\s*diverged t=(\S+)", line)
            if match:
                blowup = float(match.group(1))
            continue
        body.append(line)
    rows = list(csv.reader(io.StringIO("\n".join(body))))
    head, rows = rows[0], rows[1:]
    n = sum(1 for h in head if re.fullmatch(r"x\d+", h))
    m = sum(1 for h in head if re.fullmatch(r"z\d+", h))
    if head != header(n, m):
        raise ValueError(f"unexpected CSV header {head}")
    if rows:
        numeric = np.array([[float(c) if c else np.nan for c in r[: 1 + n + m + 2]] for r in rows])
    else:
        numeric = np.empty((0, 1 + n + m + 2))
    vp = [r[1 + n + m + 2] for r in rows]
    storage = None if rows and all(c == "" for c in vp) else np.array([float(c) for c in vp])
    if not rows:
        storage = None
    modes = np.array([int(BoundaryMode.from_code(r[-2])) for r in rows], dtype=np.int8)
    residual = np.array([float(r[-1]) if r[-1] else np.nan for r in rows])
    return Trajectory(
        times=numeric[:, 0],
        xi=numeric[:, 1: 1 + n + m],
        n_plant=n,
        u=numeric[:, 1 + n + m],
        y=numeric[:, 2 + n + m],
        modes=modes,
        residual=residual,
        storage=storage,
        diverged=blowup is not None,
        blowup_time=blowup,
    )
