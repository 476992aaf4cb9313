"""Weyl m-functions of eventually periodic Jacobi operators.

The m-function of a periodic operator solves ``alpha m**2 + beta m + gamma = 0``
and lives on the two-sheeted surface of its discriminant.  A finite prefix
is unwound with the one-step recursion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .jacobi import (
    POLE,
    PeriodicJacobi,
    PerturbedJacobi,
    first_kind_polys,
    m_step_array,
    second_kind_polys,
)
from .periodic import band_structure, discriminant
from .polycore import Poly, poly_eval
from .surface import Sheet, SurfacePoint, sharp, sqrt_disc_values


@dataclass(frozen=True)
class MFunctionPeriodic:
    """Polynomial data of the quadratic satisfied by a periodic m-function."""

    alpha: Poly  # a_p p_{p-1}
    beta: Poly  # p_p + a_p q_{p-1}
    gamma: Poly  # q_p
    delta: Poly  # discriminant


@lru_cache(maxsize=256)
def m_coefficients(pj: PeriodicJacobi) -> MFunctionPeriodic:
    J = PerturbedJacobi.periodic(pj)
    p = pj.p
    P = first_kind_polys(J, p)
    Q = second_kind_polys(J, p)
    ap = float(pj.a[-1])
    return MFunctionPeriodic(
        alpha=P[p - 1] * ap,
        beta=P[p] + Q[p - 1] * ap,
        gamma=Q[p],
        delta=discriminant(pj),
    )


def _as_periodic(J) -> PeriodicJacobi:
    if isinstance(J, PeriodicJacobi):
        return J
    return J.tail_start()


def periodic_values(pj: PeriodicJacobi, z, sheet: int) -> np.ndarray:
    """Vectorised periodic m-function on one sheet."""
    mc = m_coefficients(pj)
    z = np.asarray(z, dtype=complex)
    s = sqrt_disc_values(mc.delta, z, sheet)
    A = poly_eval(mc.alpha, z)
    B = poly_eval(mc.beta, z)
    C = poly_eval(mc.gamma, z)
    plus, minus = B + s, B - s
    # the two algebraically equal forms; use the one without cancellation
    use_alt = np.abs(plus) >= np.abs(minus)
    with np.errstate(divide="ignore", invalid="ignore"):
        alt = -2 * C / np.where(plus == 0, 1, plus)
        direct = -minus / np.where(A == 0, 1, 2 * A)
    out = np.where(use_alt, alt, direct)
    pole = np.where(use_alt, plus == 0, A == 0)
    return np.where(pole, POLE, out)


def m_periodic_eval(pj: PeriodicJacobi, x: SurfacePoint) -> complex:
    """``(-beta + sqrt(delta**2 - 4)) / (2 alpha)`` at a surface point."""
    return complex(periodic_values(pj, np.array([x.z]), x.sheet)[0])


def m_values(J: PerturbedJacobi, z, sheet: int) -> np.ndarray:
    """Vectorised m-function of an eventually periodic operator."""
    if isinstance(J, PeriodicJacobi):
        return periodic_values(J, z, sheet)
    if not J.has_periodic_tail:
        raise ValueError("m-function needs a periodic tail")
    z = np.asarray(z, dtype=complex)
    m = periodic_values(J.tail_start(), z, sheet)
    for k in range(J.prefix_len, 0, -1):
        m = m_step_array(m, float(J.a(k)), float(J.b(k)), z)
    return m


def m_eval(J: PerturbedJacobi, x: SurfacePoint) -> complex:
    """m-function of ``J`` at a surface point, or ``POLE``."""
    return complex(m_values(J, np.array([x.z]), x.sheet)[0])


def m_sharp_eval(J: PerturbedJacobi, x: SurfacePoint) -> complex:
    """``conj(m(x#))``."""
    return m_eval(J, sharp(x)).conjugate()


def delta_of(J) -> Poly:
    return discriminant(_as_periodic(J))


def _density_values(J, x: np.ndarray) -> np.ndarray:
    m = m_values(J, np.asarray(x, dtype=float) + 0j, Sheet.PLUS)
    return m.imag / np.pi


def herglotz_density(J, x: float) -> float:
    """Density of the absolutely continuous part of the spectral measure.

    The value is ``Im m(x + i0) / pi``.  It is compared with the jump of
    the continuation across the band, and a mismatch raises
    ``RuntimeError``.

    Raises
    ------
    ValueError
        If ``x`` is not inside a band or sits within ``1e-8`` of an edge.
    """
    delta = delta_of(J)
    bs = band_structure(delta)
    x = float(x)
    j = bs.band_index(x)
    if j is None:
        raise ValueError("x is not in a band")
    lo, hi = bs.bands[j]
    if min(x - lo, hi - x) <= 1e-8:
        raise ValueError("x is too close to a band edge")
    f = float(_density_values(J, np.array([x]))[0])
    eps = 1e-9 * max(1.0, min(x - lo, hi - x))
    below = m_values(J, np.array([complex(x, -eps)]), Sheet.MINUS)[0]
    above = m_values(J, np.array([complex(x, eps)]), Sheet.PLUS)[0]
    jump = (below - np.conj(above)) / (2j * np.pi)
    if abs(jump - f) > 1e-5 * max(1.0, abs(f)):
        raise RuntimeError("density and continuation jump disagree")
    return f


def _norm_bound(J: PerturbedJacobi) -> float:
    vals = [abs(float(b)) + 2 * float(a) for a, b in zip(J.prefix_a, J.prefix_b)]
    if J.has_periodic_tail:
        pj = J.tail.periodic
        vals += [abs(float(b)) + 2 * float(a) for a, b in zip(pj.a, pj.b)]
    return max(vals) + 1.0


def _real_m(J, x: np.ndarray) -> np.ndarray:
    return m_values(J, np.asarray(x, dtype=float) + 0j, Sheet.PLUS).real


def _residue(J, x0: float, h: float) -> float:
    def w(step):
        right, left = x0 + step, x0 - step
        vals = _real_m(J, np.array([right, left]))
        return -0.5 * ((right - x0) * vals[0] + (left - x0) * vals[1])

    return (4 * w(h / 2) - w(h)) / 3


def point_masses(J, search_region=None, samples: int = 4000) -> list[tuple[float, float]]:
    """Eigenvalues off the bands and their spectral weights.

    Poles of ``m`` on the physical sheet are located as sign changes of
    ``1/m`` on each gap and on the two exterior half-lines, refined by
    Brent's method.  The weight is ``-lim (x - x0) m(x)``.

    Parameters
    ----------
    J : PerturbedJacobi
        Operator with a periodic tail.
    search_region : sequence of (lo, hi), optional
        Intervals to scan instead of the gaps and the exterior.
    samples : int
        Grid points per interval.
    """
    if isinstance(J, PeriodicJacobi):
        J = PerturbedJacobi.periodic(J)
    bs = band_structure(delta_of(J))
    if search_region is None:
        B = _norm_bound(J)
        lo, hi = bs.hull
        search_region = [(-B, lo)] + [(g0, g1) for g0, g1, op in bs.gaps if op] + [(hi, B)]
    found = []
    for a, b in search_region:
        if b - a <= 0:
            continue
        pad = 1e-9 * (1 + max(abs(a), abs(b)))
        xs = np.linspace(a + pad, b - pad, samples)
        with np.errstate(divide="ignore", invalid="ignore"):
            g = 1.0 / _real_m(J, xs)
        for k in range(len(xs) - 1):
            if not (np.isfinite(g[k]) and np.isfinite(g[k + 1])):
                continue
            if g[k] == 0:
                cand = [xs[k]]
            elif g[k] * g[k + 1] < 0:
                inv = lambda t: 1.0 / _real_m(J, np.array([t]))[0]
                cand = [brentq(inv, xs[k], xs[k + 1], xtol=1e-15, rtol=1e-15)]
            else:
                continue
            x0 = cand[0]
            scale = abs(xs[1] - xs[0])
            m0 = abs(_real_m(J, np.array([x0 + 1e-3 * scale]))[0])
            if m0 * 1e-3 * scale < 1e-9:
                continue  # a zero of m, not a pole
            w = _residue(J, x0, 1e-6 * max(1.0, abs(x0)))
            if w > 0:
                found.append((float(x0), float(w)))
    found.sort()
    return found


def ac_mass(J) -> float:
    """Total weight of the absolutely continuous part."""
    bs = band_structure(delta_of(J))
    total = 0.0
    for lo, hi in bs.bands:
        half = (hi - lo) / 2

        def f(theta):
            x = lo + half * (1 - math.cos(theta))
            return float(_density_values(J, np.array([x]))[0]) * half * math.sin(theta)

        val, _ = quad(f, 0.0, math.pi, limit=400, epsabs=1e-13, epsrel=1e-12)
        total += val
    return total


def _log_abs(x) -> float:
    if isinstance(x, Fraction):
        return math.log(x.numerator) - math.log(x.denominator)
    return math.log(abs(x))


def _deviation(x, y):
    # exact when either side is a Fraction; Fraction(float) is lossless
    if isinstance(x, Fraction) or isinstance(y, Fraction):
        return abs(Fraction(x) - Fraction(y))
    return abs(x - y)


def decay_rate(J: PerturbedJacobi, J0: PeriodicJacobi, N: int) -> float:
    """Geometric decay rate ``R`` of ``|a_n - a0_n| + |b_n - b0_n|``.

    The deviations are fitted as ``C * R**(-2n)`` over ``N/2 <= n <= N``;
    ``inf`` is returned when they vanish there.
    """
    if N < 10 * J0.p:
        raise ValueError("N must be at least 10p")
    ns, logs = [], []
    for n in range(N // 2, N + 1):
        k = (n - 1) % J0.p
        d = _deviation(J.a(n), J0.a[k]) + _deviation(J.b(n), J0.b[k])
        if d != 0:
            ns.append(n)
            logs.append(_log_abs(d))
    if len(ns) < 2:
        return math.inf
    slope = np.polyfit(np.array(ns, dtype=float), np.array(logs), 1)[0]
    if slope >= 0:
        return 1.0
    return float(math.exp(-slope / 2))
