"""Controller models: linear PBC bases, the nonlinear TORA controller and a
static output-feedback gain used as the comparison baseline."""
from __future__ import annotations

import functools

import numba
import numpy as np

from .core import ConfigurationError, ControllerModel

MSD_C1_A = np.array([[1.0, -10.0], [0.0, -1.0]])
MSD_C1_B = np.array([0.0, 1.0])
TORA_C1_A = np.array([[3.0, -2.0], [0.0, -3.0]])
TORA_C1_B = np.array([0.0, 1.0])


def linear_controller(A_c, B_c, name: str = "linear") -> ControllerModel:
    """z' = A_c z + B_c v split into the z1 row and the remaining z2 rows."""
    A_c = np.atleast_2d(np.asarray(A_c, dtype=float))
    m = A_c.shape[0]
    if A_c.shape != (m, m):
        raise ConfigurationError(f"A_c must be square, got shape {A_c.shape}")
    b = np.asarray(B_c, dtype=float).reshape(-1)
    if b.shape[0] != m:
        raise ConfigurationError(f"B_c must have {m} entries, got {b.shape[0]}")
    A_c = np.ascontiguousarray(A_c)
    b = np.ascontiguousarray(b)

    @numba.njit
    def f1(z1, z2, v):
        acc = A_c[0, 0] * z1
        for j in range(1, m):
            acc += A_c[0, j] * z2[j - 1]
        return acc + b[0] * v

    @numba.njit
    def f2(z1, z2, v):
        out = np.empty(m - 1)
        for i in range(1, m):
            acc = A_c[i, 0] * z1
            for j in range(1, m):
                acc += A_c[i, j] * z2[j - 1]
            out[i - 1] = acc + b[i] * v
        return out

    return ControllerModel(m, f1, f2, name=name)


@functools.lru_cache(maxsize=None)
def msd_c1_controller() -> ControllerModel:
    return linear_controller(MSD_C1_A, MSD_C1_B, name="msd_c1")


@functools.lru_cache(maxsize=None)
def tora_c1_controller() -> ControllerModel:
    return linear_controller(TORA_C1_A, TORA_C1_B, name="tora_c1")


@numba.njit
def _c2_f1(z1, z2, v):
    return 3.0 * z1 - 2.0 * z2[0]


@numba.njit
def _c2_f2(z1, z2, v):
    out = np.empty(1)
    w = z2[0]
    out[0] = -w + (-2.0 * w**3 + (1.0 + w * w) * v * v)
    return out


@functools.lru_cache(maxsize=None)
def tora_c2_controller() -> ControllerModel:
    """Nonlinear base controller: z1' = 3 z1 - 2 z2,
    z2' = -z2 - 2 z2^3 + (1 + z2^2) v^2."""
    return ControllerModel(2, _c2_f1, _c2_f2, name="tora_c2")


@numba.njit
def _no_rate(z1, z2, v):
    return 0.0


@numba.njit
def _no_substate(z1, z2, v):
    return np.empty(0)


def static_gain_controller(k: float) -> ControllerModel:
    """Memoryless u_- = k v. Simulated without projection."""
    if not k > 0:
        raise ConfigurationError("static gain must be positive")
    return ControllerModel(1, _no_rate, _no_substate, static_gain=float(k), name=f"gain_{k:g}")
