"""Sector geometry and sector design from a (q, s, r) supply rate.

A sector [k1, k2] is certified for a plant with supply matrix M when some
lam >= 0 makes M - lam*N negative definite, N = [[1, c/2], [c/2, d]] with
c = k1 + k2 and d = k1*k2. Everything here is 2x2, so definiteness is
decided by leading principal minors and no SDP solver is involved.
"""
from __future__ import annotations

import enum
import math

import numba
import numpy as np
from scipy.optimize import minimize_scalar

from .core import DissipativityTriple, SectorBounds, SectorCertificate


class NotSectorDesignable(ValueError):
    """The supply rate falls outside every case with a known sector interval."""


class CertificateSearchFailed(RuntimeError):
    def __init__(self, message: str, bounds_tried=None):
        super().__init__(message)
        self.bounds_tried = bounds_tried


class BoundaryMode(enum.IntEnum):
    INTERIOR = 0
    LOWER_ACTIVE = 1
    UPPER_ACTIVE = 2
    APEX = 3
    OUTSIDE = 4

    @property
    def code(self) -> str:
        return "ILUAO"[self.value]

    @classmethod
    def from_code(cls, code: str) -> "BoundaryMode":
        return cls("ILUAO".index(code))


INTERIOR, LOWER_ACTIVE, UPPER_ACTIVE, APEX, OUTSIDE = (int(m) for m in BoundaryMode)


def _residual(k1, k2, v, u):
    return (u - k1 * v) * (u - k2 * v)


def _classify(k1, k2, v, u, tol):
    # Scalar kernel shared by the Python and jitted integrators; returns a mode code.
    if abs(v) <= tol and abs(u) <= tol:
        return 3
    scale = max(1.0, abs(v), abs(u))
    if (u - k1 * v) * (u - k2 * v) > tol * scale * scale:
        return 4
    on_lower = abs(u - k1 * v) <= tol * scale
    on_upper = abs(u - k2 * v) <= tol * scale
    if on_lower and on_upper:
        return 3
    if on_lower:
        return 1
    if on_upper:
        return 2
    return 0


residual_kernel = numba.njit(_residual)
classify_kernel = numba.njit(_classify)


@numba.njit
def _classify_many(k1, k2, v, u, tol):
    out = np.empty(v.shape[0], dtype=np.int8)
    for i in range(v.shape[0]):
        out[i] = classify_kernel(k1, k2, v[i], u[i], tol)
    return out


def sector_residual(bounds: SectorBounds, v, u_minus):
    """(u_- - k1 v)(u_- - k2 v); non-positive exactly on the sector."""
    return _residual(bounds.k1, bounds.k2, v, u_minus)


def classify_mode(bounds: SectorBounds, v: float, u_minus: float, tol: float = 1e-9) -> BoundaryMode:
    """Which sector constraints are active at (v, u_-).

    Tolerances are relative to max(1, |v|, |u_-|) since the residual is
    quadratic in the state. A point within tolerance of both boundary rays
    counts as the apex.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    return BoundaryMode(_classify(bounds.k1, bounds.k2, float(v), float(u_minus), tol))


def classify_modes(bounds: SectorBounds, v, u_minus, tol: float = 1e-9) -> np.ndarray:
    v = np.ascontiguousarray(v, dtype=float)
    u_minus = np.ascontiguousarray(u_minus, dtype=float)
    return _classify_many(bounds.k1, bounds.k2, v, u_minus, tol)


def _is_negative_definite(a: float, b: float, c: float) -> bool:
    return a < 0.0 and a * c - b * b > 0.0


def verify_certificate(cert: SectorCertificate) -> bool:
    """True iff M - lam*N is negative definite (leading principal minors)."""
    if cert.lam < 0:
        raise ValueError("certificate multiplier must be non-negative")
    m = cert.matrix
    return bool(_is_negative_definite(m[0, 0], m[0, 1], m[1, 1]))


def admissible_interval(triple: DissipativityTriple) -> tuple[str, float, float]:
    """Open interval of sector slopes for the supply rate, with its case name.

    Returns ``(case, lower, upper)``; ``upper`` may be ``inf``. A negative
    definite supply matrix admits any sector and reports ``(-inf, inf)``.
    """
    q, s, r = triple.q, triple.s, triple.r
    if _is_negative_definite(q, s, r):
        return "negative_definite", -math.inf, math.inf
    if q == 0 and r == 0 and s > 0:
        return "passive", 0.0, math.inf
    if q == 0 and r < 0 and s > 0:
        return "output_strictly_passive", r / (2.0 * s), math.inf
    if q > 0 and q * r - s * s < 0:
        root = math.sqrt(s * s - q * r)
        return "general", (s - root) / q, (s + root) / q
    raise NotSectorDesignable(
        f"no sector design rule for (q, s, r) = ({q}, {s}, {r}); "
        "expected passive, output-strictly passive, q > 0 with qr - s^2 < 0, "
        "or a negative definite supply matrix"
    )


def _place(lower: float, upper: float, margin: float) -> tuple[float, float]:
    if math.isinf(upper):
        k1 = lower + margin * max(1.0, abs(lower))
        return k1, k1 * (1.0 + 1.0 / margin) if k1 > 0 else k1 + max(1.0, abs(k1)) / margin
    lo, hi = min(margin, 1.0 - margin), max(margin, 1.0 - margin)
    if lo == hi:
        raise ValueError("margin 0.5 collapses a bounded interval to a point")
    width = upper - lower
    return lower + lo * width, lower + hi * width


def _max_eig(m: np.ndarray) -> float:
    a, b, c = m[0, 0], m[0, 1], m[1, 1]
    return 0.5 * (a + c) + math.hypot(0.5 * (a - c), b)


def best_multiplier(triple: DissipativityTriple, bounds: SectorBounds) -> float:
    """Multiplier lam >= 0 minimizing the largest eigenvalue of M - lam*N.

    That eigenvalue is convex in lam and grows without bound (N is
    indefinite for k1 < k2), so a bounded scalar search on
    [0, 2*||M|| / |mu_min(N)| + 1] finds the global minimum.
    """
    M = triple.supply_matrix
    half_c = 0.5 * (bounds.k1 + bounds.k2)
    N = np.array([[1.0, half_c], [half_c, bounds.k1 * bounds.k2]])
    mu_min = np.linalg.eigvalsh(N)[0]
    upper = 2.0 * np.linalg.norm(M, 2) / abs(mu_min) + 1.0
    res = minimize_scalar(
        lambda lam: _max_eig(M - lam * N),
        bounds=(0.0, upper),
        method="bounded",
        options={"xatol": 1e-12 * upper},
    )
    lam = float(res.x)
    if _max_eig(M) <= _max_eig(M - lam * N):
        lam = 0.0
    return lam


def design_sector(
    triple: DissipativityTriple, margin: float = 0.25, prefer_positive: bool = True
) -> SectorCertificate:
    """Pick a sector strictly inside the admissible interval and certify it.

    Bounded intervals place k1, k2 at relative positions ``margin`` and
    ``1 - margin``. Half-lines start at ``lower + margin*max(1, |lower|)``
    and put k2 = k1*(1 + 1/margin). For output-strictly passive plants the
    interval reaches below zero; ``prefer_positive`` keeps k1 = margin there.
    """
    if not 0.0 < margin < 1.0:
        raise ValueError("margin must lie in (0, 1)")
    case, lower, upper = admissible_interval(triple)
    if case == "negative_definite":
        bounds = SectorBounds(margin, 1.0 + margin)
        return SectorCertificate(bounds, 0.0, triple)
    if case == "output_strictly_passive" and prefer_positive:
        lower = max(lower, 0.0)
    bounds = SectorBounds(*_place(lower, upper, margin))
    cert = SectorCertificate(bounds, best_multiplier(triple, bounds), triple)
    if not verify_certificate(cert):
        raise CertificateSearchFailed(
            f"no multiplier certifies sector ({bounds.k1}, {bounds.k2}) for {triple}",
            bounds_tried=[bounds],
        )
    return cert


LAMBDA_BAR_GRID = np.logspace(-3, 3, 61)
C_GRID = np.linspace(-20.0, 20.0, 201)
D_GRID = np.linspace(-100.0, 100.0, 201)


def _grid_scores(triple: DissipativityTriple, lam_bar, c, d):
    lb, cc, dd = np.meshgrid(lam_bar, c, d, indexing="ij")
    a = lb * triple.q - 1.0
    b = lb * triple.s - 0.5 * cc
    e = lb * triple.r - dd
    max_eig = 0.5 * (a + e) + np.hypot(0.5 * (a - e), b)
    scale = 2.0 + lb * np.abs(triple.supply_matrix).sum() + np.abs(cc) + np.abs(dd)
    score = -max_eig / scale
    feasible = (a < 0) & (a * e - b * b > 0) & (cc * cc - 4.0 * dd > 0) & (score > 1e-12)
    return np.where(feasible, score, -np.inf)


def _refine_axis(grid, i, num=21, log=False):
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    if log:
        return np.logspace(np.log10(lo), np.log10(hi), num)
    return np.linspace(lo, hi, num)


def synthesize_certificate_search(
    triple: DissipativityTriple,
    lam_bar_grid: np.ndarray = LAMBDA_BAR_GRID,
    c_grid: np.ndarray = C_GRID,
    d_grid: np.ndarray = D_GRID,
) -> SectorCertificate:
    """Grid search in (lam_bar, c, d) = (1/lam, k1 + k2, k1*k2).

    In these variables the certificate condition is linear:
    lam_bar*M - [[1, c/2], [c/2, d]] negative definite, plus c**2 > 4d for
    distinct real slopes. The most robustly feasible cell wins (ties go to
    the lexicographically smallest), then one finer grid around it.
    """
    scores = _grid_scores(triple, lam_bar_grid, c_grid, d_grid)
    flat = int(np.argmax(scores))
    if not np.isfinite(scores.flat[flat]):
        raise CertificateSearchFailed(f"no feasible grid cell for {triple}")
    i, j, k = np.unravel_index(flat, scores.shape)
    fine_l = _refine_axis(lam_bar_grid, i, log=True)
    fine_c = _refine_axis(c_grid, j)
    fine_d = _refine_axis(d_grid, k)
    fine = _grid_scores(triple, fine_l, fine_c, fine_d)
    fi, fj, fk = np.unravel_index(int(np.argmax(fine)), fine.shape)
    lam_bar, c, d = fine_l[fi], fine_c[fj], fine_d[fk]
    if not fine[fi, fj, fk] >= scores[i, j, k]:
        lam_bar, c, d = lam_bar_grid[i], c_grid[j], d_grid[k]
    lam_bar, c, d = float(lam_bar), float(c), float(d)
    root = math.sqrt(c * c - 4.0 * d)
    bounds = SectorBounds(0.5 * (c - root), 0.5 * (c + root))
    cert = SectorCertificate(bounds, 1.0 / lam_bar, triple)
    if not verify_certificate(cert):
        raise CertificateSearchFailed(
            f"grid optimum ({bounds.k1}, {bounds.k2}) failed verification", bounds_tried=[bounds]
        )
    return cert
