"""Domain types for closed loops with a projection-based controller.

The closed loop is the negative feedback interconnection of a SISO plant

    x' = f_p(x, u),   y = G_p x

with a controller whose first state is its output,

    z1' = f1(z1, z2, v),   z2' = f2(z1, z2, v),   u_- = z1,

closed by v = y and u = -u_-. The stacked state is xi = (x, z1, z2).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class ConfigurationError(ValueError):
    """Inconsistent dimensions or parameters in a model or scenario."""


@dataclass(frozen=True)
class DissipativityTriple:
    """Weights of the quadratic supply rate q*u**2 + 2*s*u*y + r*y**2."""

    q: float
    s: float
    r: float

    @property
    def supply_matrix(self) -> np.ndarray:
        return np.array([[self.q, self.s], [self.s, self.r]], dtype=float)

    def supply(self, u, y):
        return self.q * u * u + 2.0 * self.s * u * y + self.r * y * y


@dataclass(frozen=True)
class SectorBounds:
    """Slopes of the sector {(v, u_-) : (u_- - k1 v)(u_- - k2 v) <= 0}."""

    k1: float
    k2: float

    def __post_init__(self):
        if not (np.isfinite(self.k1) and np.isfinite(self.k2)):
            raise ConfigurationError("sector slopes must be finite")
        if not self.k1 < self.k2:
            raise ConfigurationError(
                f"sector requires k1 < k2, got k1={self.k1}, k2={self.k2}"
            )


@dataclass(frozen=True)
class SectorCertificate:
    """Sector bounds together with the multiplier ``lam`` that makes
    M - lam*N negative definite for the supply matrix M of ``triple``."""

    bounds: SectorBounds
    lam: float
    triple: DissipativityTriple

    @property
    def c(self) -> float:
        return self.bounds.k1 + self.bounds.k2

    @property
    def d(self) -> float:
        return self.bounds.k1 * self.bounds.k2

    @property
    def sector_matrix(self) -> np.ndarray:
        half_c = 0.5 * self.c
        return np.array([[1.0, half_c], [half_c, self.d]])

    @property
    def matrix(self) -> np.ndarray:
        """M - lam*N, the matrix that must be negative definite."""
        return self.triple.supply_matrix - self.lam * self.sector_matrix

    @property
    def minors(self) -> tuple[float, float]:
        m = self.matrix
        return float(m[0, 0]), float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])


@dataclass(frozen=True)
class ClosedLoopState:
    x: np.ndarray
    z1: float
    z2: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)).copy())
        object.__setattr__(self, "z1", float(self.z1))
        object.__setattr__(self, "z2", np.atleast_1d(np.asarray(self.z2, dtype=float)).copy())
        if self.x.ndim != 1 or self.z2.ndim != 1:
            raise ConfigurationError("x and z2 must be one-dimensional")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def m(self) -> int:
        return 1 + self.z2.shape[0]

    @property
    def z(self) -> np.ndarray:
        return np.concatenate(([self.z1], self.z2))

    def as_vector(self) -> np.ndarray:
        return np.concatenate((self.x, [self.z1], self.z2))

    @classmethod
    def from_vector(cls, vec, n: int) -> "ClosedLoopState":
        vec = np.asarray(vec, dtype=float)
        if vec.ndim != 1 or vec.shape[0] < n + 1:
            raise ConfigurationError(
                f"state vector of length {vec.shape} cannot hold n={n} plant states and z1"
            )
        return cls(vec[:n], vec[n], vec[n + 1:])

    @classmethod
    def zeros(cls, n: int, m: int) -> "ClosedLoopState":
        return cls(np.zeros(n), 0.0, np.zeros(m - 1))


@dataclass(frozen=True)
class PlantModel:
    """SISO plant x' = field(x, u), y = output_row @ x.

    ``storage``/``storage_grad`` are optional; without them the plant can be
    simulated but not audited for storage decrease or dissipativity.
    """

    dim: int
    field: Callable[[np.ndarray, float], np.ndarray]
    output_row: np.ndarray
    storage: Optional[Callable[[np.ndarray], float]] = None
    storage_grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "plant"

    def __post_init__(self):
        row = np.atleast_1d(np.asarray(self.output_row, dtype=float)).ravel().copy()
        object.__setattr__(self, "output_row", row)
        if self.dim < 1:
            raise ConfigurationError("plant dimension must be positive")
        if row.shape[0] != self.dim:
            raise ConfigurationError(
                f"output row has {row.shape[0]} entries, plant dimension is {self.dim}"
            )
        if (self.storage is None) != (self.storage_grad is None):
            raise ConfigurationError("storage and storage_grad must be given together")

    @property
    def has_storage(self) -> bool:
        return self.storage is not None

    def output(self, x) -> float:
        return float(self.output_row @ np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ControllerModel:
    """Controller z1' = f1(z1, z2, v), z2' = f2(z1, z2, v), output u_- = z1.

    A controller with ``static_gain`` set is the memoryless law u_- = k*v;
    its z1 is then an algebraic copy of k*v and it never gets projected.
    """

    dim: int
    f1: Callable[[float, np.ndarray, float], float]
    f2: Callable[[float, np.ndarray, float], np.ndarray]
    static_gain: Optional[float] = None
    name: str = "controller"

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigurationError("controller dimension must be at least 1 (z1)")
        if self.static_gain is not None and self.dim != 1:
            raise ConfigurationError("a static-gain controller has exactly one state slot")

    @property
    def is_static(self) -> bool:
        return self.static_gain is not None

    def output(self, z1: float, v: float) -> float:
        if self.static_gain is not None:
            return self.static_gain * v
        return z1


def check_dimensions(plant: PlantModel, controller: ControllerModel, xi: ClosedLoopState):
    if xi.n != plant.dim:
        raise ConfigurationError(f"state has {xi.n} plant components, plant expects {plant.dim}")
    if xi.m != controller.dim:
        raise ConfigurationError(
            f"state has {xi.m} controller components, controller expects {controller.dim}"
        )


def unprojected_field(plant: PlantModel, controller: ControllerModel, xi: ClosedLoopState) -> np.ndarray:
    """Closed-loop vector field (f_p(x, -z1), f1, f2) before projection."""
    check_dimensions(plant, controller, xi)
    x = xi.x
    v = plant.output(x)
    z1 = controller.output(xi.z1, v)
    fx = np.asarray(plant.field(x, -z1), dtype=float)
    if controller.is_static:
        rate = controller.static_gain * float(plant.output_row @ fx)
        return np.concatenate((fx, [rate]))
    w1 = float(controller.f1(z1, xi.z2, v))
    w2 = np.asarray(controller.f2(z1, xi.z2, v), dtype=float).reshape(-1)
    return np.concatenate((fx, [w1], w2))


@dataclass
class Trajectory:
    """Samples of a closed-loop run.

    ``xi`` holds one stacked state (x, z1, z2) per row. ``modes`` stores
    :class:`pbckit.sector.BoundaryMode` codes and ``residual`` the sector
    residual of each sample (NaN when the run has no sector).
    """

    times: np.ndarray
    xi: np.ndarray
    n_plant: int
    u: np.ndarray
    y: np.ndarray
    modes: np.ndarray
    residual: np.ndarray
    storage: Optional[np.ndarray] = None
    diverged: bool = False
    blowup_time: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.xi = np.atleast_2d(np.asarray(self.xi, dtype=float))
        if len(self.times) == 0:
            self.xi = self.xi.reshape(0, self.xi.shape[-1] if self.xi.size else self.n_plant + 1)
        n = len(self.times)
        lengths = [len(self.xi), len(self.u), len(self.y), len(self.modes), len(self.residual)]
        if self.storage is not None:
            lengths.append(len(self.storage))
        if any(k != n for k in lengths):
            raise ConfigurationError(f"trajectory columns have unequal lengths {lengths} vs {n}")
        if n > 1 and not np.all(np.diff(self.times) > 0):
            raise ConfigurationError("trajectory times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def x(self) -> np.ndarray:
        return self.xi[:, : self.n_plant]

    @property
    def z1(self) -> np.ndarray:
        return self.xi[:, self.n_plant]

    @property
    def z2(self) -> np.ndarray:
        return self.xi[:, self.n_plant + 1:]

    @property
    def states(self) -> list[ClosedLoopState]:
        return [ClosedLoopState.from_vector(row, self.n_plant) for row in self.xi]

    @property
    def final_state(self) -> ClosedLoopState:
        return ClosedLoopState.from_vector(self.xi[-1], self.n_plant)
