"""Discriminants of periodic Jacobi matrices and their band structure."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .jacobi import PeriodicJacobi, PerturbedJacobi
from .polycore import Poly, poly_eval

__all__ = [
    "PeriodicJacobi",
    "BandStructure",
    "Preimages",
    "discriminant",
    "band_structure",
    "delta_preimages",
    "torus_check",
    "capacity",
    "period",
]

_REAL_TOL = 1e-8
_CRITICAL_TOL = 1e-10
_BASE_POINT = 2.0 + 1.0j


def period(delta: Poly) -> int:
    return delta.degree


def discriminant(pj: PeriodicJacobi) -> Poly:
    """Trace of the one-period transfer matrix.

    The transfer matrix is the ordered product ``T_p ... T_1`` with
    ``T_j = [[z - b_j, -1], [a_j**2, 0]] / a_j``.
    """
    z = Poly.identity()
    m = [[Poly([1.0]), Poly()], [Poly(), Poly([1.0])]]
    for a, b in zip(pj.a, pj.b):
        a, b = float(a), float(b)
        t = [[(z - b) / a, Poly([-1.0 / a])], [Poly([a]), Poly()]]
        m = [
            [t[0][0] * m[0][0] + t[0][1] * m[1][0], t[0][0] * m[0][1] + t[0][1] * m[1][1]],
            [t[1][0] * m[0][0] + t[1][1] * m[1][0], t[1][0] * m[0][1] + t[1][1] * m[1][1]],
        ]
    return m[0][0] + m[1][1]


def capacity(delta: Poly) -> float:
    """Logarithmic capacity ``|c0|**(-1/p)`` of the band set."""
    p = delta.degree
    if p < 1:
        raise ValueError("capacity needs a non-constant polynomial")
    return abs(delta.leading) ** (-1.0 / p)


@dataclass(frozen=True)
class BandStructure:
    bands: tuple  # ((alpha_1, beta_1), ...), left to right
    gaps: tuple  # ((beta_j, alpha_{j+1}, is_open), ...)
    gamma: tuple  # critical points, one per gap
    critical_values: tuple
    c0: float
    capacity: float

    @property
    def p(self) -> int:
        return len(self.bands)

    @property
    def edges(self) -> np.ndarray:
        return np.array([e for band in self.bands for e in band])

    @property
    def branch_points(self) -> np.ndarray:
        """Band edges, with the coinciding ends of closed gaps removed."""
        pts = [self.bands[0][0]]
        for (lo, hi, is_open), nxt in zip(self.gaps, self.bands[1:]):
            if is_open:
                pts.extend([lo, hi])
        pts.append(self.bands[-1][1])
        return np.array(pts)

    @property
    def hull(self) -> tuple[float, float]:
        return (self.bands[0][0], self.bands[-1][1])

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return any(lo - tol <= x <= hi + tol for lo, hi in self.bands)

    def band_index(self, x: float, tol: float = 0.0):
        for j, (lo, hi) in enumerate(self.bands):
            if lo - tol <= x <= hi + tol:
                return j
        return None


def _real_roots(poly: Poly) -> np.ndarray:
    r = poly.roots()
    scale = 1 + np.abs(r)
    if np.any(np.abs(r.imag) > _REAL_TOL * scale):
        raise ValueError("not a discriminant of a periodic Jacobi matrix")
    return np.sort(r.real)


@lru_cache(maxsize=256)
def band_structure(delta: Poly) -> BandStructure:
    """Bands, gaps and critical data of the polynomial ``delta``.

    Raises
    ------
    ValueError
        If ``delta - 2`` or ``delta + 2`` has non-real roots, or the roots
        fail to interlace.
    """
    p = delta.degree
    if p < 1 or not delta.is_real:
        raise ValueError("not a discriminant of a periodic Jacobi matrix")
    c0 = float(delta.leading)
    if c0 <= 0:
        raise ValueError("not a discriminant of a periodic Jacobi matrix")
    plus = _real_roots(delta - 2.0)
    minus = _real_roots(delta + 2.0)
    # interlacing, read from the right: x+_p > x-_p >= x-_{p-1} > x+_{p-1} >= ...
    seq = []
    for j in range(p - 1, -1, -1):
        pair = (plus[j], minus[j]) if (p - 1 - j) % 2 == 0 else (minus[j], plus[j])
        seq.extend(pair)
    for k in range(len(seq) - 1):
        tol = 1e-8 * (1 + abs(seq[k]))
        if seq[k + 1] > seq[k] + tol:
            raise ValueError("not a discriminant of a periodic Jacobi matrix")
    bands = tuple(
        (float(min(plus[j], minus[j])), float(max(plus[j], minus[j]))) for j in range(p)
    )
    gaps = []
    for j in range(p - 1):
        lo, hi = bands[j][1], bands[j + 1][0]
        is_open = (hi - lo) > 1e-8 * (1 + abs(lo))
        gaps.append((lo, hi, bool(is_open)))
    gamma = ()
    crit = ()
    if p > 1:
        g = np.sort(_real_roots(delta.derivative()))
        gamma = tuple(float(x) + 0.0 for x in g)
        crit = tuple(float(poly_eval(delta, x)) for x in g)
    return BandStructure(
        bands=bands,
        gaps=tuple(gaps),
        gamma=gamma,
        critical_values=crit,
        c0=c0,
        capacity=capacity(delta),
    )


class Preimages(NamedTuple):
    values: np.ndarray  # f_1(lam), ..., f_p(lam) in label order
    critical: bool  # lam sits on a critical value; labels are not defined


def _label_order(roots: np.ndarray) -> np.ndarray:
    idx = sorted(range(len(roots)), key=lambda i: (-roots[i].real, -roots[i].imag))
    return roots[idx]


def _roots_at(delta: Poly, lam: complex) -> np.ndarray:
    return (delta - lam).roots()


def _track(delta: Poly, start: np.ndarray, lam0: complex, lam1: complex) -> np.ndarray:
    # follow each root of delta(z) = lam along the segment lam0 -> lam1
    cur = start
    t, dt = 0.0, 1.0 / 16
    while t < 1.0:
        dt = min(dt, 1.0 - t)
        lam = lam0 + (t + dt) * (lam1 - lam0)
        new = _roots_at(delta, lam)
        dist = np.abs(cur[:, None] - new[None, :])
        rows, cols = linear_sum_assignment(dist)
        moved = dist[rows, cols].max()
        sep = np.inf
        if len(cur) > 1:
            d = np.abs(cur[:, None] - cur[None, :])
            sep = d[~np.eye(len(cur), dtype=bool)].min()
        if moved < 0.25 * sep or dt < 1e-9:
            cur = new[cols[np.argsort(rows)]]
            t += dt
            dt *= 2
        else:
            dt /= 2
    return cur


def _polish(delta: Poly, lam: complex, z: np.ndarray) -> np.ndarray:
    d1 = delta.derivative()
    out = z.copy()
    for _ in range(3):
        f = poly_eval(delta, out) - lam
        df = poly_eval(d1, out)
        step = np.where(df != 0, f / np.where(df != 0, df, 1), 0)
        out = out - step
    return out


def delta_preimages(delta: Poly, lam: complex) -> Preimages:
    """The ``p`` solutions of ``delta(z) = lam`` with consistent labels.

    Labels are fixed at the base point ``2 + i`` by descending real part
    (ties by descending imaginary part) and carried to ``lam`` by
    continuation through the region off ``(-inf, -2] U [2, inf)``.  On those
    rays the value is the limit from the upper half-plane.
    """
    bs = band_structure(delta)
    lam = complex(lam)
    for cv in bs.critical_values:
        if abs(lam - cv) <= _CRITICAL_TOL:
            roots = np.sort_complex(_roots_at(delta, lam))[::-1]
            return Preimages(roots, True)
    if delta.degree == 1:
        return Preimages(_roots_at(delta, lam), False)
    base = _label_order(_roots_at(delta, _BASE_POINT))
    target = lam
    on_ray = lam.imag == 0 and abs(lam.real) > 2
    if on_ray:
        target = complex(lam.real, 1e-9 * (1 + abs(lam.real)))
    if target.imag >= 0:
        vals = _track(delta, base, _BASE_POINT, target)
    else:
        mid = _track(delta, base, _BASE_POINT, 0.0)
        vals = _track(delta, mid, 0.0, target)
    if on_ray:
        vals = _polish(delta, lam, vals)
    return Preimages(vals, False)


def _banded_deviation(M: np.ndarray, p: int, rows: range) -> float:
    dev = 0.0
    n = M.shape[0]
    for i in rows:
        for j in range(max(0, i - p), min(n, i + p + 1)):
            want = 1.0 if abs(i - j) == p else 0.0
            dev = max(dev, abs(M[i, j] - want))
    return dev


def torus_check(J, delta: Poly, window: int) -> tuple[bool, float]:
    """Test whether ``delta(J)`` is the shift pattern ``S**p + S**-p``.

    ``window`` rows are examined, starting after the first ``p*deg``
    rows to stay clear of the boundary.  A finite prefix is part of the
    matrix and is examined like any other row.

    Returns
    -------
    (on_torus, deviation)
        ``deviation`` is the largest entrywise distance from the pattern
        inside the band; ``on_torus`` holds when it is at most ``1e-10``.
    """
    p = delta.degree
    if window < 3 * p:
        raise ValueError("window must be at least 3p")
    if isinstance(J, PeriodicJacobi):
        J = PerturbedJacobi.periodic(J)
    start = p * p
    size = start + window + 2 * p + 2
    X = J.matrix(size)
    M = np.zeros_like(X)
    for c in reversed(delta.coeffs):
        M = M @ X + float(c) * np.eye(size)
    dev = _banded_deviation(M, p, range(start, start + window))
    return bool(dev <= 1e-10), float(dev)
