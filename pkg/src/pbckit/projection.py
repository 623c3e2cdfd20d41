"""Partial projection of the closed-loop field onto the sector's tangent cone.

Only controller coordinates may be corrected, and for a sector constraint
the minimal correction touches z1 alone: the projected z1-rate is the
point of the feasible rate interval nearest to the unprojected one.
With v' the output velocity induced by the plant:

    lower ray, v > 0:   z1' >= k1 v'      lower ray, v < 0:   z1' <= k1 v'
    upper ray, v > 0:   z1' <= k2 v'      upper ray, v < 0:   z1' >= k2 v'
    apex:               z1' in [min(k1 v', k2 v'), max(k1 v', k2 v')]

At the apex the sector is its own tangent cone.
"""
from __future__ import annotations

import numba
import numpy as np

from .core import ClosedLoopState, SectorBounds
from .sector import APEX, INTERIOR, LOWER_ACTIVE, OUTSIDE, UPPER_ACTIVE, BoundaryMode, _classify


class StateLeftAdmissibleSet(ValueError):
    """The state is outside the sector; repair it before projecting."""


def _projected_rate(k1, k2, v, f1, v_dot, mode):
    if mode == 0:
        return f1
    a = k1 * v_dot
    b = k2 * v_dot
    if mode == 1:
        return max(f1, a) if v > 0 else min(f1, a)
    if mode == 2:
        return min(f1, b) if v > 0 else max(f1, b)
    if mode == 3:
        lo = min(a, b)
        hi = max(a, b)
        return min(max(f1, lo), hi)
    # Outside: left to the caller, which repairs states before evaluating.
    return f1


def _clamp_z1(k1, k2, v, z1):
    a = k1 * v
    b = k2 * v
    lo = min(a, b)
    hi = max(a, b)
    if z1 < lo:
        return lo
    if z1 > hi:
        return hi
    return z1


projected_rate_kernel = numba.njit(_projected_rate)
clamp_z1_kernel = numba.njit(_clamp_z1)


def _output(xi: ClosedLoopState, output_row) -> float:
    row = np.asarray(output_row, dtype=float).ravel()
    if row.shape[0] != xi.n:
        raise ValueError(f"output row has {row.shape[0]} entries, state has {xi.n} plant components")
    return float(row @ xi.x)


def partial_project(
    bounds: SectorBounds,
    xi: ClosedLoopState,
    f,
    v_dot: float,
    *,
    output_row,
    tol: float = 1e-9,
) -> np.ndarray:
    """Project the stacked field ``f`` at ``xi``; only the z1 entry may change.

    ``v_dot`` is ``output_row @ f[:n]``, the output velocity the plant
    imposes regardless of the controller.
    """
    f = np.array(f, dtype=float)
    v = _output(xi, output_row)
    mode = _classify(bounds.k1, bounds.k2, v, xi.z1, tol)
    if mode == OUTSIDE:
        raise StateLeftAdmissibleSet(
            f"(v, z1) = ({v}, {xi.z1}) lies outside sector ({bounds.k1}, {bounds.k2})"
        )
    n = xi.n
    f[n] = _projected_rate(bounds.k1, bounds.k2, v, f[n], float(v_dot), mode)
    return f


def _residual_gradient(k1, k2, v, u):
    # gradient of (u - k1 v)(u - k2 v) with respect to (v, u)
    return -k1 * (u - k2 * v) - k2 * (u - k1 * v), (u - k1 * v) + (u - k2 * v)


@numba.njit
def _nearest_feasible(f1, step, half, kind, gv, gu, k1, k2, v_dot):
    # Scan grid points f1 + j*step, |j| <= half, outward from f1; the first
    # feasible one is the nearest. kind 0: unconstrained, 1: gradient
    # half-plane gv*v_dot + gu*w <= 0, 2: w inside the sector cone at v_dot.
    for j in range(half + 1):
        for sign in (-1.0, 1.0):
            w = f1 + sign * j * step
            if kind == 0:
                return w
            if kind == 1:
                if gv * v_dot + gu * w <= 0.0:
                    return w
            elif (w - k1 * v_dot) * (w - k2 * v_dot) <= 0.0:
                return w
    return np.nan


def project_oracle(
    bounds: SectorBounds,
    xi: ClosedLoopState,
    f,
    v_dot: float,
    *,
    output_row,
    tol: float = 1e-9,
    n_grid: int = 10**6 + 1,
) -> np.ndarray:
    """Brute-force reference for :func:`partial_project`.

    Feasible z1-rates come from the first-order condition on the sector
    residual r(v, z1): grad r . (v', w) <= 0 on a boundary ray, and
    r(v', w) <= 0 at the apex where the gradient vanishes. The nearest
    feasible point of an ``n_grid``-point grid centred on f1 is substituted
    (spacing given by :func:`oracle_grid_step`).
    """
    f = np.array(f, dtype=float)
    v = _output(xi, output_row)
    mode = _classify(bounds.k1, bounds.k2, v, xi.z1, tol)
    if mode == OUTSIDE:
        raise StateLeftAdmissibleSet("oracle called outside the sector")
    n = xi.n
    f1 = f[n]
    half = (n_grid - 1) // 2
    step = oracle_grid_step(bounds, f1, v_dot, n_grid)
    gv, gu = _residual_gradient(bounds.k1, bounds.k2, v, xi.z1)
    kind = {INTERIOR: 0, LOWER_ACTIVE: 1, UPPER_ACTIVE: 1, APEX: 2}[mode]
    w = _nearest_feasible(f1, step, half, kind, gv, gu, bounds.k1, bounds.k2, float(v_dot))
    if np.isnan(w):
        raise RuntimeError("oracle grid holds no feasible z1-rate")
    f[n] = w
    return f


def oracle_grid_step(bounds: SectorBounds, f1: float, v_dot: float, n_grid: int = 10**6 + 1) -> float:
    """Grid spacing of :func:`project_oracle` over [f1 - R, f1 + R]."""
    radius = 10.0 * (1.0 + abs(f1) + abs(bounds.k1 * v_dot) + abs(bounds.k2 * v_dot))
    return radius / ((n_grid - 1) // 2)


def repair_state(bounds: SectorBounds, xi: ClosedLoopState, *, output_row) -> ClosedLoopState:
    """Clamp z1 into [min(k1 v, k2 v), max(k1 v, k2 v)]; x and z2 untouched."""
    v = _output(xi, output_row)
    return ClosedLoopState(xi.x, _clamp_z1(bounds.k1, bounds.k2, v, xi.z1), xi.z2)


def active_mode(bounds: SectorBounds, xi: ClosedLoopState, *, output_row, tol: float = 1e-9) -> BoundaryMode:
    return BoundaryMode(_classify(bounds.k1, bounds.k2, _output(xi, output_row), xi.z1, tol))
