"""Fixed-step integration of the projected closed loop.

Each RK4 stage state is clamped back into the sector before its field is
evaluated, the field is projected, and the combined step is clamped once
more. The projected field is discontinuous, so near boundary entries and
exits the scheme is only first-order accurate; on smooth stretches
(interior or sliding along one ray) it is the usual fourth order.

The same kernels run either as plain Python, for user-written model
callables, or compiled with numba when every model callable is jitted.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np
from numba.extending import is_jitted

from .core import (
    ClosedLoopState,
    ConfigurationError,
    ControllerModel,
    PlantModel,
    SectorBounds,
    Trajectory,
    check_dimensions,
)
from .projection import _clamp_z1, _projected_rate, clamp_z1_kernel, projected_rate_kernel
from .sector import (
    APEX,
    INTERIOR,
    LOWER_ACTIVE,
    OUTSIDE,
    UPPER_ACTIVE,
    _classify,
    classify_kernel,
    classify_modes,
)

BLOWUP_LIMIT = 1e9


class NumericalBlowup(ArithmeticError):
    def __init__(self, t: float, state: np.ndarray):
        super().__init__(f"state left |xi| <= {BLOWUP_LIMIT:g} or became non-finite at t={t:.6g}")
        self.t = t
        self.state = state


@dataclass(frozen=True)
class IntegratorConfig:
    horizon: float = 20.0
    h: float = 1e-4
    mode_tol: float = 1e-9
    drift_budget: float = 1e-7
    record_stride: int = 10

    def __post_init__(self):
        if not self.h > 0:
            raise ConfigurationError("step h must be positive")
        if not self.horizon >= self.h:
            raise ConfigurationError("horizon must be at least one step")
        if not (self.mode_tol > 0 and self.drift_budget > 0):
            raise ConfigurationError("mode_tol and drift_budget must be positive")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ConfigurationError("record_stride must be a positive integer")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.h))


@dataclass(frozen=True)
class Scenario:
    plant: PlantModel
    controller: ControllerModel
    bounds: Optional[SectorBounds]
    xi0: ClosedLoopState
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    projection_enabled: bool = True
    name: str = "scenario"

    def __post_init__(self):
        check_dimensions(self.plant, self.controller, self.xi0)
        if not self.projection_enabled:
            return
        if self.controller.is_static:
            raise ConfigurationError("a static-gain controller is never projected; disable projection")
        if self.bounds is None:
            raise ConfigurationError("projection needs sector bounds")
        v = self.plant.output(self.xi0.x)
        mode = _classify(self.bounds.k1, self.bounds.k2, v, self.xi0.z1, self.integrator.mode_tol)
        if mode == OUTSIDE:
            raise ConfigurationError(
                f"initial state (v, z1) = ({v}, {self.xi0.z1}) is outside sector "
                f"({self.bounds.k1}, {self.bounds.k2})"
            )


def _make_kernels(deco, classify, project_rate, clamp):
    @deco
    def dot(a, b):
        acc = 0.0
        for i in range(a.shape[0]):
            acc += a[i] * b[i]
        return acc

    @deco
    def repair(s, G, n, k1, k2):
        s[n] = clamp(k1, k2, dot(G, s[:n]), s[n])

    @deco
    def rates(field, f1, f2, G, n, k1, k2, tol, gain, static, project, s):
        x = s[:n]
        v = dot(G, x)
        z1 = gain * v if static else s[n]
        z2 = s[n + 1:]
        fx = field(x, -z1)
        v_dot = dot(G, fx)
        out = np.empty(s.shape[0])
        out[:n] = fx
        if static:
            out[n] = gain * v_dot
        else:
            w = f1(z1, z2, v)
            if project:
                w = project_rate(k1, k2, v, w, v_dot, classify(k1, k2, v, z1, tol))
            out[n] = w
            out[n + 1:] = f2(z1, z2, v)
        return out

    @deco
    def rk4(field, f1, f2, G, n, k1, k2, tol, gain, static, project, h, s):
        a = rates(field, f1, f2, G, n, k1, k2, tol, gain, static, project, s)
        s2 = s + 0.5 * h * a
        if project:
            repair(s2, G, n, k1, k2)
        b = rates(field, f1, f2, G, n, k1, k2, tol, gain, static, project, s2)
        s3 = s + 0.5 * h * b
        if project:
            repair(s3, G, n, k1, k2)
        c = rates(field, f1, f2, G, n, k1, k2, tol, gain, static, project, s3)
        s4 = s + h * c
        if project:
            repair(s4, G, n, k1, k2)
        d = rates(field, f1, f2, G, n, k1, k2, tol, gain, static, project, s4)
        new = s + (h / 6.0) * (a + 2.0 * b + 2.0 * c + d)
        drift = 0.0
        v = dot(G, new[:n])
        if static:
            new[n] = gain * v
        elif project:
            scale = max(1.0, abs(v), abs(new[n]))
            drift = (new[n] - k1 * v) * (new[n] - k2 * v) / (scale * scale)
            new[n] = clamp(k1, k2, v, new[n])
        return new, drift

    @deco
    def integrate(field, f1, f2, G, n, k1, k2, tol, gain, static, project, h, n_steps, stride,
                  s0, budget, limit):
        n_rec = n_steps // stride + 1
        if n_steps % stride:
            n_rec += 1
        rec = np.empty((n_rec, s0.shape[0]))
        idx = np.empty(n_rec, dtype=np.int64)
        s = s0.copy()
        if static:
            s[n] = gain * dot(G, s[:n])
        elif project:
            repair(s, G, n, k1, k2)
        rec[0] = s
        idx[0] = 0
        r = 1
        max_drift = 0.0
        flagged = 0
        fail = -1
        last = s
        for i in range(1, n_steps + 1):
            new, drift = rk4(field, f1, f2, G, n, k1, k2, tol, gain, static, project, h, s)
            finite = True
            for q in new:
                if not abs(q) <= limit:
                    finite = False
            if not finite:
                fail = i
                last = new
                break
            if drift > max_drift:
                max_drift = drift
            if drift > budget:
                flagged += 1
            s = new
            if i % stride == 0 or i == n_steps:
                rec[r] = s
                idx[r] = i
                r += 1
        return rec[:r], idx[:r], fail, max_drift, flagged, last

    return rk4, integrate


def _identity(fn):
    return fn


_PY_RK4, _PY_INTEGRATE = _make_kernels(_identity, _classify, _projected_rate, _clamp_z1)
_JIT_RK4, _JIT_INTEGRATE = _make_kernels(
    numba.njit, classify_kernel, projected_rate_kernel, clamp_z1_kernel
)


def uses_compiled_path(plant: PlantModel, controller: ControllerModel) -> bool:
    return all(is_jitted(fn) for fn in (plant.field, controller.f1, controller.f2))


def _as_array_fn(fn):
    def wrapped(*args):
        return np.asarray(fn(*args), dtype=float)

    return wrapped


def _kernel_args(scenario: Scenario):
    plant, controller = scenario.plant, scenario.controller
    compiled = uses_compiled_path(plant, controller)
    if compiled:
        fns = (plant.field, controller.f1, controller.f2)
    else:
        fns = (_as_array_fn(plant.field), controller.f1, _as_array_fn(controller.f2))
    project = bool(scenario.projection_enabled)
    k1, k2 = (scenario.bounds.k1, scenario.bounds.k2) if scenario.bounds is not None else (0.0, 0.0)
    static = controller.is_static
    gain = float(controller.static_gain) if static else 0.0
    cfg = scenario.integrator
    args = (
        *fns,
        np.ascontiguousarray(plant.output_row, dtype=float),
        plant.dim,
        float(k1),
        float(k2),
        float(cfg.mode_tol),
        gain,
        static,
        project,
        float(cfg.h),
    )
    return compiled, args


def step(scenario: Scenario, xi: ClosedLoopState, t: float = 0.0) -> ClosedLoopState:
    """Advance ``xi`` by one step of size ``scenario.integrator.h``.

    With projection on, ``xi`` is first clamped into the sector.
    """
    check_dimensions(scenario.plant, scenario.controller, xi)
    compiled, args = _kernel_args(scenario)
    rk4 = _JIT_RK4 if compiled else _PY_RK4
    s = xi.as_vector()
    n = scenario.plant.dim
    if scenario.projection_enabled:
        g = scenario.plant.output_row
        s[n] = _clamp_z1(scenario.bounds.k1, scenario.bounds.k2, float(g @ s[:n]), s[n])
    new, _ = rk4(*args, s)
    new = np.asarray(new, dtype=float)
    if not np.all(np.abs(new) <= BLOWUP_LIMIT):
        raise NumericalBlowup(t + scenario.integrator.h, new)
    return ClosedLoopState.from_vector(new, n)


def simulate(scenario: Scenario) -> Trajectory:
    """Integrate over [0, horizon], recording every ``record_stride`` steps.

    A blow-up ends the run early; the trajectory then carries
    ``diverged=True`` and ``blowup_time``.
    """
    compiled, args = _kernel_args(scenario)
    integrate = _JIT_INTEGRATE if compiled else _PY_INTEGRATE
    cfg = scenario.integrator
    plant = scenario.plant
    n = plant.dim
    started = time.perf_counter()
    rec, idx, fail, max_drift, flagged, last = integrate(
        *args,
        int(cfg.n_steps),
        int(cfg.record_stride),
        scenario.xi0.as_vector(),
        float(cfg.drift_budget),
        BLOWUP_LIMIT,
    )
    elapsed = time.perf_counter() - started

    times = idx * cfg.h
    x = rec[:, :n]
    y = x @ plant.output_row
    z1 = rec[:, n]
    storage = None
    if plant.has_storage:
        storage = np.array([plant.storage(row) for row in x])
    if scenario.bounds is not None:
        k1, k2 = scenario.bounds.k1, scenario.bounds.k2
        residual = (z1 - k1 * y) * (z1 - k2 * y)
        modes = classify_modes(scenario.bounds, y, z1, cfg.mode_tol)
    else:
        residual = np.full(len(times), np.nan)
        modes = np.full(len(times), INTERIOR, dtype=np.int8)
    diverged = fail >= 0
    meta = {
        "scenario": scenario.name,
        "h": cfg.h,
        "horizon": cfg.horizon,
        "projection_enabled": scenario.projection_enabled,
        "compiled": compiled,
        "elapsed_s": elapsed,
        "max_pre_repair_residual": float(max_drift),
        "repairs_over_budget": int(flagged),
        "initial_norm": float(np.linalg.norm(scenario.xi0.as_vector())),
    }
    if diverged:
        meta["blowup_state"] = np.asarray(last)
    return Trajectory(
        times=times,
        xi=rec,
        n_plant=n,
        u=-z1,
        y=y,
        modes=modes,
        residual=residual,
        storage=storage,
        diverged=diverged,
        blowup_time=float(fail * cfg.h) if diverged else None,
        meta=meta,
    )


SLIDING_MODES = (LOWER_ACTIVE, UPPER_ACTIVE, APEX)


def sliding_fraction(traj: Trajectory) -> float:
    """Share of samples sitting on a sector boundary ray or at the apex."""
    if len(traj) == 0:
        return 0.0
    return float(np.isin(traj.modes, SLIDING_MODES).mean())
