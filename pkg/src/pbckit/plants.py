"""Plant models: generic LTI, the mass-spring-damper and the passivated TORA.

Built-in fields are numba-compiled closures so the integrator can run them
in its compiled loop; storage functions are plain numpy.
"""
from __future__ import annotations

import functools
import math

import numba
import numpy as np

from .core import ConfigurationError, PlantModel

MSD_A = np.array([[0.0, 1.0], [-10.0, -0.01]])
MSD_B = np.array([0.0, 1.0])
MSD_OUTPUT = np.array([0.0, 1.0])
MSD_STORAGE_MATRIX = np.diag([10.0, 1.0])


def _quadratic_storage(P):
    P = P.copy()

    def storage(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * float(x @ P @ x)

    def storage_grad(x):
        return P @ np.asarray(x, dtype=float)

    return storage, storage_grad


def lti_model(A, B, output_row, P=None, name: str = "lti") -> PlantModel:
    """x' = A x + B u, y = output_row @ x, storage 0.5 x'Px when P is given."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    if A.shape != (n, n):
        raise ConfigurationError(f"A must be square, got shape {A.shape}")
    b = np.asarray(B, dtype=float).reshape(-1)
    if b.shape[0] != n:
        raise ConfigurationError(f"B must have {n} entries, got {b.shape[0]}")
    A = np.ascontiguousarray(A)
    b = np.ascontiguousarray(b)

    @numba.njit
    def field(x, u):
        out = np.empty(n)
        for i in range(n):
            acc = b[i] * u
            for j in range(n):
                acc += A[i, j] * x[j]
            out[i] = acc
        return out

    storage = storage_grad = None
    if P is not None:
        P = np.atleast_2d(np.asarray(P, dtype=float))
        if P.shape != (n, n):
            raise ConfigurationError(f"P must be {n}x{n}, got shape {P.shape}")
        if not np.allclose(P, P.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(P).max())):
            raise ConfigurationError("P must be symmetric")
        try:
            np.linalg.cholesky(P)
        except np.linalg.LinAlgError:
            raise ConfigurationError("P must be positive definite") from None
        storage, storage_grad = _quadratic_storage(P)
    return PlantModel(n, field, output_row, storage, storage_grad, name=name)


@functools.lru_cache(maxsize=None)
def msd_model() -> PlantModel:
    """Mass-spring-damper with velocity output.

    Its total energy 0.5*(10 x1^2 + x2^2) satisfies
    V' = -0.01 x2^2 + u x2, i.e. the plant is (0, 1/2, -0.01)-dissipative.
    """
    return lti_model(MSD_A, MSD_B, MSD_OUTPUT, MSD_STORAGE_MATRIX, name="msd")


def tora_mechanical_energy(state, epsilon: float = 0.1) -> float:
    th, th_dot, p, p_dot = np.asarray(state, dtype=float)
    return 0.5 * (th_dot**2 + p_dot**2 + 2.0 * epsilon * th_dot * p_dot * math.cos(th) + p**2)


def tora_model(epsilon: float = 0.1, h0: float = 10.0, h1: float = 1.0) -> PlantModel:
    """TORA closed with its passivating inner loop; input w, output theta'.

    State is (theta, theta', p, p') with p the normalized cart position.
    The inner loop is u = h0*eps*cos(theta)*p - h1*theta + w, written in the
    transformed coordinates zeta1 = p + eps*sin(theta),
    zeta2 = p' + eps*theta'*cos(theta) as
    u = -h0*eps*cos(theta)*(-zeta1 + eps*sin(theta)) - h1*theta + w.
    The storage

        W = (h0+1)/2 [(zeta1 - eps sin theta)^2 + zeta2^2] + h1/2 theta^2
            + 1/2 theta'^2 (1 - eps^2 cos^2 theta)

    obeys W' = w*theta', so the model is (0, 1/2, 0)-dissipative.
    h0 = h1 = 0 removes the inner loop and W becomes the mechanical energy.
    """
    if not 0.0 < epsilon < 1.0:
        raise ConfigurationError("TORA coupling epsilon must lie in (0, 1)")
    if h0 < 0 or h1 < 0:
        raise ConfigurationError("passivating gains h0, h1 must be non-negative")
    return _tora_model(float(epsilon), float(h0), float(h1))


@functools.lru_cache(maxsize=None)
def _tora_model(eps: float, h0: float, h1: float) -> PlantModel:

    @numba.njit
    def field(x, w):
        th = x[0]
        th_dot = x[1]
        p = x[2]
        c = math.cos(th)
        s = math.sin(th)
        zeta1 = p + eps * s
        u = -h0 * eps * c * (-zeta1 + eps * s) - h1 * th + w
        rhs2 = -p + eps * th_dot * th_dot * s
        # [[1, eps c], [eps c, 1]] @ (th'', p'') = (u, rhs2)
        det = 1.0 - eps * eps * c * c
        out = np.empty(4)
        out[0] = th_dot
        out[1] = (u - eps * c * rhs2) / det
        out[2] = x[3]
        out[3] = (rhs2 - eps * c * u) / det
        return out

    def storage(x):
        th, th_dot, p, p_dot = np.asarray(x, dtype=float)
        zeta1 = p + eps * math.sin(th)
        zeta2 = p_dot + eps * th_dot * math.cos(th)
        return (
            0.5 * (h0 + 1.0) * ((zeta1 - eps * math.sin(th)) ** 2 + zeta2**2)
            + 0.5 * h1 * th**2
            + 0.5 * th_dot**2 * (1.0 - eps**2 * math.cos(th) ** 2)
        )

    def storage_grad(x):
        th, th_dot, p, p_dot = np.asarray(x, dtype=float)
        c, s = math.cos(th), math.sin(th)
        zeta1 = p + eps * s
        zeta2 = p_dot + eps * th_dot * c
        # partials in (zeta1, zeta2, y1 = theta, y2 = theta')
        d_zeta1 = (h0 + 1.0) * (zeta1 - eps * s)
        d_zeta2 = (h0 + 1.0) * zeta2
        d_y1 = -(h0 + 1.0) * (zeta1 - eps * s) * eps * c + h1 * th + eps**2 * th_dot**2 * s * c
        d_y2 = th_dot * (1.0 - eps**2 * c**2)
        # rows: d(zeta1, zeta2, y1, y2) / d(theta, theta', p, p')
        jac = np.array(
            [
                [eps * c, 0.0, 1.0, 0.0],
                [-eps * th_dot * s, eps * c, 0.0, 1.0],
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
            ]
        )
        return jac.T @ np.array([d_zeta1, d_zeta2, d_y1, d_y2])

    return PlantModel(4, field, np.array([0.0, 1.0, 0.0, 0.0]), storage, storage_grad, name="tora")
