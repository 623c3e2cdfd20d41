"""Sampled dissipativity checks, trajectory audits and performance metrics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.stats import qmc

from .core import DissipativityTriple, PlantModel, SectorBounds, Trajectory


class NotCheckable(ValueError):
    """The plant carries no storage function to check against."""


@dataclass(frozen=True)
class SamplingBox:
    """Axis-aligned box of plant states and inputs."""

    state: tuple[tuple[float, float], ...]
    input: tuple[float, float]

    def __post_init__(self):
        state = tuple((float(lo), float(hi)) for lo, hi in self.state)
        lo, hi = self.input
        object.__setattr__(self, "state", state)
        object.__setattr__(self, "input", (float(lo), float(hi)))
        for lo, hi in (*state, self.input):
            if not lo <= hi:
                raise ValueError(f"box interval ({lo}, {hi}) is reversed")

    @classmethod
    def symmetric(cls, state_radius: Sequence[float], input_radius: float) -> "SamplingBox":
        return cls(tuple((-r, r) for r in state_radius), (-input_radius, input_radius))

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.state] + [self.input[0]])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.state] + [self.input[1]])


@dataclass(frozen=True)
class DissipativityReport:
    """``max_residual`` is the largest residual V' - supply divided by
    1 + |V'| + |supply| over the samples."""

    n_samples: int
    max_residual: float
    worst_point: tuple[np.ndarray, float]
    worst_raw_residual: float
    tol: float
    passed: bool


def check_dissipativity(
    plant: PlantModel,
    triple: DissipativityTriple,
    box: SamplingBox,
    n: int = 10_000,
    tol: float = 1e-9,
) -> DissipativityReport:
    """Test grad V . f(x, u) <= q u^2 + 2 s u y + r y^2 on Halton points of ``box``."""
    if not plant.has_storage:
        raise NotCheckable(f"plant '{plant.name}' has no storage function")
    if n < 1:
        raise ValueError("need at least one sample")
    if len(box.state) != plant.dim:
        raise ValueError(f"box has {len(box.state)} state intervals, plant dimension is {plant.dim}")
    unit = qmc.Halton(d=plant.dim + 1, scramble=False).random(n)
    points = box.lower + unit * (box.upper - box.lower)
    raw = np.empty(n)
    scaled = np.empty(n)
    for i, point in enumerate(points):
        x, u = point[:-1], point[-1]
        v_dot = float(plant.storage_grad(x) @ np.asarray(plant.field(x, u), dtype=float))
        supply = triple.supply(u, plant.output(x))
        raw[i] = v_dot - supply
        scaled[i] = raw[i] / (1.0 + abs(v_dot) + abs(supply))
    worst = int(np.argmax(scaled))
    return DissipativityReport(
        n_samples=n,
        max_residual=float(scaled[worst]),
        worst_point=(points[worst, :-1].copy(), float(points[worst, -1])),
        worst_raw_residual=float(raw[worst]),
        tol=tol,
        passed=bool(scaled[worst] <= tol),
    )


@dataclass(frozen=True)
class AuditRecord:
    max_residual: float
    max_storage_increment: float
    total_storage_increase: float
    storage_monotone: Optional[bool]
    diverged: bool
    blowup_time: Optional[float]
    passed: bool


def audit_trajectory(
    traj: Trajectory,
    bounds: Optional[SectorBounds],
    *,
    drift_budget: float = 1e-7,
    slack: float = 1e-6,
    total_increase_rel: float = 1e-4,
) -> AuditRecord:
    """Check sector invariance and storage decrease along a recorded run.

    Storage increments between consecutive samples must stay below
    ``slack`` and their positive part must sum to at most
    ``total_increase_rel`` times the initial storage. Without bounds the
    residual check is skipped; without storage the monotonicity verdict is
    ``None``.
    """
    if bounds is not None and len(traj):
        v = traj.y
        z1 = traj.z1
        max_residual = float(np.max((z1 - bounds.k1 * v) * (z1 - bounds.k2 * v)))
    else:
        max_residual = float("nan") if bounds is not None else 0.0
    monotone = None
    max_inc = total_inc = 0.0
    if traj.storage is not None and len(traj) > 1:
        inc = np.diff(traj.storage)
        max_inc = float(max(inc.max(), 0.0))
        total_inc = float(inc[inc > 0].sum())
        monotone = bool(max_inc <= slack and total_inc <= total_increase_rel * traj.storage[0])
    residual_ok = bounds is None or max_residual <= drift_budget
    passed = (not traj.diverged) and residual_ok and monotone is not False
    return AuditRecord(
        max_residual=max_residual,
        max_storage_increment=max_inc,
        total_storage_increase=total_inc,
        storage_monotone=monotone,
        diverged=traj.diverged,
        blowup_time=traj.blowup_time,
        passed=bool(passed),
    )


@dataclass(frozen=True)
class PerformanceMetrics:
    settling_time: float
    overshoot: float
    zero_crossings: int
    converged: bool


def _signal(traj: Trajectory, state_index: Optional[int]) -> np.ndarray:
    return traj.y if state_index is None else traj.x[:, state_index]


def count_zero_crossings(signal, deadband_rel: float = 1e-9) -> int:
    """Strict sign changes, ignoring samples within ``deadband_rel * peak`` of zero."""
    signal = np.asarray(signal, dtype=float)
    if signal.size == 0:
        return 0
    peak = np.max(np.abs(signal))
    signs = np.sign(signal[np.abs(signal) > deadband_rel * peak])
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def performance_metrics(
    traj: Trajectory,
    band: float = 0.02,
    threshold: Optional[float] = None,
    state_index: Optional[int] = None,
) -> PerformanceMetrics:
    """Settling time of y, overshoot and zero crossings of a designated signal.

    The signal is y, or plant state ``state_index`` when given. Overshoot is
    the largest excursion past the final value on the far side from the
    start, relative to the initial distance to the final value. Times are
    measured from the first sample. ``threshold`` defaults to 1e-2 times the
    initial state norm.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    t = traj.times - traj.times[0]
    y = np.abs(traj.y)
    peak = y.max()
    outside = np.nonzero(y > band * peak)[0]
    settled = True
    if outside.size == 0:
        settling = 0.0
    elif outside[-1] == len(y) - 1:
        settling = float(t[-1])
        settled = False
    else:
        settling = float(t[outside[-1] + 1])

    sig = _signal(traj, state_index)
    start, final = sig[0], sig[-1]
    if start == final:
        overshoot = 0.0
    else:
        beyond = (final - sig) * np.sign(start - final)
        overshoot = float(max(beyond.max(), 0.0) / abs(start - final))

    if threshold is None:
        threshold = 1e-2 * np.linalg.norm(traj.xi[0])
    converged = settled and bool(np.linalg.norm(traj.xi[-1]) <= threshold) and not traj.diverged
    return PerformanceMetrics(settling, overshoot, count_zero_crossings(sig), converged)
