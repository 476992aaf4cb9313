"""Sampled checks of the analytic conditions characterising m-functions of
eventually periodic operators.

Zeros and poles are searched on two charts of each sheet.  The sheet
chart is analytic off the bands.  The glued chart takes the upper half of
one sheet and the lower half of the other, and is analytic across the band
interiors.  Every point of the surface away from the band edges is interior
to one of them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.ndimage import maximum_filter, minimum_filter, uniform_filter

from .jacobi import as_operator
from .mfunction import delta_of, m_values
from .periodic import band_structure
from .polycore import Poly
from .surface import er_bbox, joukowski_coord, sqrt_disc_values

POLE_THRESHOLD = 1e8
_NUDGE = 2e-12


@dataclass(frozen=True)
class SamplerConfig:
    resolution: int = 160  # grid points per axis; forced even
    band_samples: int = 400
    edge_radii: tuple = (1e-2, 1e-3, 1e-4, 1e-5)


@dataclass(frozen=True)
class Violation:
    kind: str
    location: complex
    sheet: int
    value: float


@dataclass
class ConditionReport:
    continuation_ok: bool
    band_pole_violations: list = field(default_factory=list)
    band_edge_pole_orders: list = field(default_factory=list)  # (edge, order)
    mm_sharp_zero_violations: list = field(default_factory=list)
    sharp_pair_pole_violations: list = field(default_factory=list)
    samples_used: int = 0
    poles: list = field(default_factory=list)  # (z, sheet, order) found off the edges
    region: tuple = ()  # box scanned, (x0, y0, x1, y1)

    @property
    def ok(self) -> bool:
        return (
            self.continuation_ok
            and not self.band_pole_violations
            and all(order <= 1 for _, order in self.band_edge_pole_orders)
            and not self.mm_sharp_zero_violations
            and not self.sharp_pair_pole_violations
        )

    @property
    def violations(self) -> list:
        out = list(self.band_pole_violations)
        out += [
            Violation("edge_pole_order", complex(e), 0, float(k))
            for e, k in self.band_edge_pole_orders
            if k > 1
        ]
        return out + self.mm_sharp_zero_violations + self.sharp_pair_pole_violations


MFun = Callable[[np.ndarray, int], np.ndarray]


class _Scanner:
    def __init__(self, mfun: MFun, delta: Poly, R: float, config: SamplerConfig):
        self.mfun = mfun
        self.delta = delta
        self.R = R
        self.config = config
        self.bs = band_structure(delta)
        self.edges = self.bs.branch_points
        self.evals = 0

    # evaluation -----------------------------------------------------------
    def m(self, z, sheet: int) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        self.evals += z.size
        return self.mfun(z, int(sheet))

    def _in_bands(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.bs.bands:
            out |= (x > lo) & (x < hi)
        return out

    def chart_sheet(self, chart: str, z: np.ndarray, sigma: int) -> np.ndarray:
        if chart == "sheet":
            return np.full(z.shape, sigma)
        return np.where(z.imag >= 0, sigma, -sigma)

    def _prepare(self, chart: str, z: np.ndarray):
        z = np.asarray(z, dtype=complex)
        near = np.abs(z.imag) < _NUDGE
        if chart == "glued":
            # stay on the side the chart is continuous from
            z = np.where(near & self._in_bands(z.real), z.real + 1j * _NUDGE, z)
        return z

    def chart_m(self, chart: str, z, sigma: int) -> np.ndarray:
        z = self._prepare(chart, np.atleast_1d(z))
        sh = self.chart_sheet(chart, z, sigma)
        out = np.empty(z.shape, dtype=complex)
        for s in (1, -1):
            mask = sh == s
            if mask.any():
                out[mask] = self.m(z[mask], s)
        return out

    def chart_g(self, chart: str, z, sigma: int) -> np.ndarray:
        """``m - m#`` in the chart."""
        z = self._prepare(chart, np.atleast_1d(z))
        sh = self.chart_sheet(chart, z, sigma)
        out = np.empty(z.shape, dtype=complex)
        for s in (1, -1):
            mask = sh == s
            if mask.any():
                zz = z[mask]
                ms = self.m(np.conj(zz), -s)
                out[mask] = self.m(zz, s) - np.conj(ms)
        return out

    # geometry -------------------------------------------------------------
    def edge_dist(self, z: np.ndarray) -> np.ndarray:
        return np.min(np.abs(z[..., None] - self.edges), axis=-1)

    def cut_dist(self, chart: str, z: np.ndarray) -> np.ndarray:
        x, y = z.real, np.abs(z.imag)
        inb = self._in_bands(x)
        if chart == "sheet":
            return np.where(inb, y, np.hypot(y, self._dist_to_bands(x)))
        edge = np.min(np.abs(x[..., None] - self.bs.edges), axis=-1)
        return np.where(inb, np.hypot(y, edge), y)

    def _dist_to_bands(self, x: np.ndarray) -> np.ndarray:
        d = np.full(x.shape, np.inf)
        for lo, hi in self.bs.bands:
            d = np.minimum(d, np.maximum(0, np.maximum(lo - x, x - hi)))
        return d

    def in_region(self, z: np.ndarray) -> np.ndarray:
        if math.isinf(self.R):
            return np.ones(z.shape, dtype=bool)
        return np.abs(joukowski_coord(self.delta, z)) < self.R

    def bbox(self):
        if math.isinf(self.R):
            lo, hi = self.bs.hull
            w = 0.5 * (hi - lo) + 1.0
            return (lo - w, -w, hi + w, w)
        return er_bbox(self.delta, self.R)

    # refinement -----------------------------------------------------------
    def newton(self, fn, z0: complex, h: float, radius: float):
        z = complex(z0)
        d = h * 1e-4
        for _ in range(60):
            f, fp, fq = fn(np.array([z, z + d, z - d]))
            if not np.isfinite(f):
                return None
            if f == 0:
                return z
            df = (fp - fq) / (2 * d)
            ddf = (fp - 2 * f + fq) / (d * d)
            den = 2 * df * df - f * ddf
            if den == 0 or not np.isfinite(den):
                return None
            # Halley: exact for Moebius maps, so close pole/zero pairs converge
            step = 2 * f * df / den
            z = z - step
            if abs(z - z0) > radius:
                return None
            if abs(step) <= 1e-14 * (1 + abs(z)):
                return z
        return z

    def winding(self, fn, z0: complex, rho: float) -> int:
        t = 2 * np.pi * np.arange(257) / 256
        vals = fn(z0 + rho * np.exp(1j * t))
        if not np.all(np.isfinite(vals)) or np.any(vals == 0):
            return 0
        return int(round(np.sum(np.diff(np.unwrap(np.angle(vals)))) / (2 * np.pi)))

    def local_winding(self, fn, z0: complex, rho: float) -> int:
        # shrink until a nearby partner of opposite type drops out
        for _ in range(8):
            w = self.winding(fn, z0, rho)
            if w != 0:
                return w
            rho /= 10
        return 0

    # scans ----------------------------------------------------------------
    @staticmethod
    def _spherical(A: np.ndarray, h: float) -> np.ndarray:
        """``|f'| / (1 + |f|**2)``; peaks on poles and zeros alike, even small ones."""
        fin = np.isfinite(A)
        B = np.where(fin, A, 0)
        dA = np.gradient(B, h, axis=1)
        out = np.abs(dA) / (1 + np.abs(B) ** 2)
        return np.where(fin, out, np.inf)

    def _candidates(self, A: np.ndarray, h: float, valid: np.ndarray, kind: str) -> list:
        absA = np.where(np.isfinite(A), np.abs(A), np.inf)
        out = self._local_extrema(absA, valid & np.isfinite(absA), kind)
        sph = self._spherical(A, h)
        ok = valid & np.isfinite(sph)
        # only sharp peaks; broad maxima belong to smooth stretches
        mean = uniform_filter(np.where(ok, sph, 0.0), size=3, mode="nearest")
        extra = [ij for ij in self._local_extrema(sph, ok, "max") if sph[ij] >= 1.25 * mean[ij]]
        seen = set(out)
        return out + [ij for ij in extra if ij not in seen]

    def grid(self, box=None, n=None):
        x0, y0, x1, y1 = self.bbox() if box is None else box
        n = n or self.config.resolution
        n += n % 2
        xs = np.linspace(x0, x1, n)
        ys = np.linspace(y0, y1, n)
        Z = xs[None, :] + 1j * ys[:, None]
        h = max(xs[1] - xs[0], ys[1] - ys[0])
        return Z, h

    def _local_extrema(self, A: np.ndarray, valid: np.ndarray, kind: str) -> list:
        # grid points whose whole 3x3 block is valid and extremal at the centre
        whole = minimum_filter(valid.astype(np.uint8), size=3, mode="constant", cval=0).astype(bool)
        if not whole.any():
            return []
        B = np.where(valid, A, 0.0)
        if kind == "min":
            hit = B <= minimum_filter(B, size=3, mode="nearest")
        else:
            hit = B >= maximum_filter(B, size=3, mode="nearest")
        return [tuple(ij) for ij in np.argwhere(whole & hit)]

    def scan(self, box=None, n=None):
        Z, h = self.grid(box, n)
        region = self.in_region(Z)
        edge_ok = self.edge_dist(Z) > 3 * h
        zeros, poles = [], []
        all_finite = True
        identically_zero = None
        for chart in ("sheet", "glued"):
            valid_geo = region & edge_ok & (self.cut_dist(chart, Z) > 2 * h)
            for sigma in (1, -1):
                M = self.chart_m(chart, Z.ravel(), sigma).reshape(Z.shape)
                G = self.chart_g(chart, Z.ravel(), sigma).reshape(Z.shape)
                if np.isnan(M).any():
                    all_finite = False
                absM = np.where(np.isfinite(M), np.abs(M), np.inf)
                absG = np.where(np.isfinite(G), np.abs(G), np.inf)
                valid = valid_geo & np.isfinite(absG)
                scale = max(1.0, float(np.median(absM[np.isfinite(absM)])))
                if valid.any() and absG[valid].max() <= 1e-12 * scale:
                    i, j = np.argwhere(valid)[0]
                    identically_zero = (complex(Z[i, j]), sigma, float(absG[i, j]))
                    continue
                fm = lambda z, c=chart, s=sigma: self.chart_m(c, z, s)
                fg = lambda z, c=chart, s=sigma: self.chart_g(c, z, s)
                inv = lambda z, c=chart, s=sigma: 1.0 / self.chart_m(c, z, s)
                for i, j in self._candidates(G, h, valid, "min"):
                    z0 = complex(Z[i, j])
                    z = self.newton(fg, z0, h, 2 * h)
                    if z is None:
                        continue
                    val = abs(fg(np.array([z]))[0])
                    ref = max(1.0, abs(fm(np.array([z]))[0]))
                    if val > 1e-8 * ref:
                        continue
                    rho = self._radius(chart, z, h)
                    if rho > 0 and self.local_winding(fg, z, rho) >= 1:
                        zeros.append((z, int(self.chart_sheet(chart, np.array([z]), sigma)[0]), val))
                for i, j in self._candidates(M, h, valid_geo, "max"):
                    z0 = complex(Z[i, j])
                    z = self.newton(inv, z0, h, 2 * h)
                    if z is None:
                        continue
                    val = abs(fm(np.array([z]))[0])
                    if not val > POLE_THRESHOLD:
                        continue
                    rho = self._radius(chart, z, h)
                    order = -self.local_winding(fm, z, rho) if rho > 0 else 0
                    if order >= 1:
                        sh = int(self.chart_sheet(chart, np.array([z]), sigma)[0])
                        poles.append((z, sh, order, chart))
        return zeros, poles, all_finite, identically_zero, h

    def _edge_gap(self, e: float) -> float:
        others = np.abs(self.edges - e)
        others = others[others > 0]
        return float(others.min()) if others.size else float(max(1.0, abs(e)))

    def scan_all(self):
        """Grid scan, nested refinements around each branch point, and a scan
        in the local coordinate there."""
        zeros, poles, finite, ident, h = self.scan()
        if ident is not None:
            return zeros, poles, finite, ident
        for e in self.edges:
            d = self._edge_gap(e)
            hc = h
            while 3 * hc > d / 8:
                w = 6 * hc
                z2, p2, f2, i2, hc = self.scan((e - w, -w, e + w, w), 64)
                zeros += z2
                poles += p2
                finite = finite and f2
                ident = ident or i2
            z2, p2 = self.edge_scan(e, d)
            zeros += z2
            poles += p2
        return zeros, poles, finite, ident

    def edge_scan(self, e: float, d: float, n: int = 64):
        """Scan of ``|z - e| < d/4`` in the coordinate ``t = sqrt(z - e)``.

        Both sheets are covered at once; ``t`` and ``-t`` lie over the same
        base point on opposite sheets.
        """
        rho = math.sqrt(d / 4)
        t0 = 0.5 * rho
        s_ref = self._branch_ratio(e, np.array([complex(t0)]), np.ones(1))[0]

        def lift(t):
            t = np.atleast_1d(np.asarray(t, dtype=complex))
            z = e + t * t
            r = self._branch_ratio(e, t, np.ones(t.shape))
            sheet = np.where((r * np.conj(s_ref)).real >= 0, 1, -1)
            # on a band the sign of a zero imaginary part picks the edge t came from
            z = z.copy()
            z.imag = np.where(z.imag == 0, np.copysign(0.0, t.real * t.imag), z.imag)
            return z, sheet

        def fm(t):
            z, sh = lift(t)
            out = np.empty(z.shape, dtype=complex)
            for s in (1, -1):
                mask = sh == s
                if mask.any():
                    out[mask] = self.m(z[mask], s)
            return out

        def fg(t):
            z, sh = lift(t)
            out = np.empty(z.shape, dtype=complex)
            for s in (1, -1):
                mask = sh == s
                if mask.any():
                    zz = z[mask]
                    out[mask] = self.m(zz, s) - np.conj(self.m(np.conj(zz), -s))
            return out

        n += n % 2
        inv = lambda t: 1.0 / fm(t)
        zeros, poles = [], []
        # nested discs: each level covers the hole left around t = 0 by the last
        floor = 1e-10 * d
        while True:
            ts = np.linspace(-rho, rho, n)
            T = ts[None, :] + 1j * ts[:, None]
            h = ts[1] - ts[0]
            Zt, Sh = lift(T.ravel())
            Zt, Sh = Zt.reshape(T.shape), Sh.reshape(T.shape)
            valid = (np.abs(T) < rho) & (np.abs(T) > 2 * h) & self.in_region(Zt)
            M = fm(T.ravel()).reshape(T.shape)
            G = fg(T.ravel()).reshape(T.shape)
            for i, j in self._candidates(G, h, valid, "min"):
                t = self.newton(fg, complex(T[i, j]), h, 2 * h)
                if t is None or abs(t) <= h:
                    continue
                val = abs(fg(np.array([t]))[0])
                if val > 1e-8 * max(1.0, abs(fm(np.array([t]))[0])):
                    continue
                if self.local_winding(fg, t, min(h, 0.5 * abs(t))) >= 1:
                    z, sh = lift(t)
                    zeros.append((complex(z[0]), int(sh[0]), val))
            for i, j in self._candidates(M, h, valid, "max"):
                t = self.newton(inv, complex(T[i, j]), h, 2 * h)
                if t is None or abs(t) <= h:
                    continue
                if not abs(fm(np.array([t]))[0]) > POLE_THRESHOLD:
                    continue
                order = -self.local_winding(fm, t, min(h, 0.5 * abs(t)))
                if order >= 1:
                    z, sh = lift(t)
                    poles.append((complex(z[0]), int(sh[0]), order, "edge"))
            if (3 * h) ** 2 < floor:
                break
            rho = 3 * h
        return zeros, poles

    def _branch_ratio(self, e: float, t: np.ndarray, sheet: np.ndarray) -> np.ndarray:
        # sqrt_disc / t, continuous in t once the sheet is fixed by its sign
        z = e + t * t
        z.imag = np.where(z.imag == 0, np.copysign(0.0, t.real * t.imag), z.imag)
        return sqrt_disc_values(self.delta, z, 1) / t

    def _radius(self, chart: str, z: complex, h: float) -> float:
        za = np.array([z])
        return float(min(h, 0.5 * self.cut_dist(chart, za)[0], 0.5 * self.edge_dist(za)[0]))

    def band_scan(self):
        """One-dimensional scan of the band interiors on the glued chart."""
        poles, zeros = [], []
        n = self.config.band_samples
        for lo, hi in self.bs.bands:
            if hi - lo <= 0:
                continue
            pad = 1e-4 * (hi - lo)
            xs = np.linspace(lo + pad, hi - pad, n)
            vals = self.m(xs + 0j, 1)
            absm = np.where(np.isfinite(vals), np.abs(vals), np.inf)
            dens = np.abs(vals.imag)
            h = xs[1] - xs[0]
            for k in range(1, n - 1):
                if absm[k] >= absm[k - 1] and absm[k] >= absm[k + 1]:
                    inv = lambda z: 1.0 / self.chart_m("glued", z, 1)
                    z = self.newton(inv, complex(xs[k]), h, 2 * h)
                    if z is not None and abs(self.chart_m("glued", np.array([z]), 1)[0]) > POLE_THRESHOLD:
                        poles.append(z)
                if dens[k] <= dens[k - 1] and dens[k] <= dens[k + 1]:
                    fg = lambda z: self.chart_g("glued", z, 1)
                    z = self.newton(fg, complex(xs[k]), h, 2 * h)
                    if z is None:
                        continue
                    val = abs(fg(np.array([z]))[0])
                    ref = max(1.0, abs(self.chart_m("glued", np.array([z]), 1)[0]))
                    if val <= 1e-8 * ref:
                        zeros.append((z, 1, val))
        return poles, zeros

    def edge_orders(self, nearby=()):
        """Pole order of ``m`` and zero order of ``m - m#`` at each branch point,
        measured in the local coordinate ``sqrt(z - e)``.

        The circles stay well inside any pole or zero listed in ``nearby``.
        """
        angles = np.array([1, 2, 3, -1, -2, -3]) * np.pi / 4
        nearby = np.asarray(list(nearby), dtype=complex)
        out = []
        for e in self.edges:
            others = np.abs(self.edges - e)
            others = others[others > 0]
            ell = min(1.0, float(others.min())) if others.size else 1.0
            if nearby.size:
                ell = min(ell, 10 * float(np.min(np.abs(nearby - e))))
            lm, lg, lr = [], [], []
            for r in self.config.edge_radii:
                z = e + ell * r * np.exp(1j * angles)
                vm, vg = [], []
                for s in (1, -1):
                    vm.append(self.chart_m("sheet", z, s))
                    vg.append(self.chart_g("sheet", z, s))
                vm, vg = np.concatenate(vm), np.concatenate(vg)
                lm.append(np.mean(np.log(np.abs(vm))))
                lg.append(np.mean(np.log(np.maximum(np.abs(vg), 1e-300))))
                lr.append(math.log(ell * r))
            sm = np.polyfit(lr, lm, 1)[0]
            sg = np.polyfit(lr, lg, 1)[0]
            pole_order = max(0, int(round(-2 * sm)))
            zero_order = int(round(2 * sg))
            out.append((float(e), pole_order, zero_order))
        return out


def _snap(z) -> complex:
    # imaginary parts at rounding level are noise on a real point
    z = complex(z)
    return complex(z.real, 0.0) if abs(z.imag) <= 1e-12 * (1 + abs(z)) else z


def _is_sharp_match(z1, s1, z2, s2) -> bool:
    return s1 == -s2 and abs(z1 - np.conj(z2)) <= 1e-6 * (1 + abs(z1))


def check_conditions(target, R: float = math.inf, delta: Poly | None = None, config: SamplerConfig | None = None) -> ConditionReport:
    """Sampled verification of the analytic conditions on ``m``.

    Parameters
    ----------
    target : PerturbedJacobi or callable
        An eventually periodic operator, or a vectorised function
        ``m(z, sheet)`` on the surface of ``delta``.
    R : float
        Size of the region ``E_R``; ``inf`` scans a fixed box around the
        bands.
    delta : Poly, optional
        Discriminant; required when ``target`` is a callable.
    config : SamplerConfig, optional

    Returns
    -------
    ConditionReport
        Each violation carries a witness location.  Checked are poles on
        the band interiors, pole orders at band edges, zeros of ``m - m#``
        (allowed only as simple zeros at band edges), and poles at both
        ends of a pair ``x, x#``.
    """
    config = config or SamplerConfig()
    if callable(target) and not hasattr(target, "prefix_a"):
        if delta is None:
            raise ValueError("delta is required for a bare m-function")
        mfun = target
    else:
        J = as_operator(target)
        delta = delta_of(J) if delta is None else delta
        mfun = lambda z, s, J=J: m_values(J, z, s)
    sc = _Scanner(mfun, delta, R, config)
    report = ConditionReport(continuation_ok=True, region=tuple(float(v) for v in sc.bbox()))

    zeros, poles, finite, ident = sc.scan_all()
    report.continuation_ok = finite
    bpoles, bzeros = sc.band_scan()
    zeros += bzeros

    if ident is not None:
        z, s, v = ident
        report.mm_sharp_zero_violations.append(Violation("mm_sharp_identically_zero", z, s, v))

    seen = []
    if ident is not None:
        zeros = []
    for z, s, v in zeros:
        glued = abs(z.imag) <= 1e-7 and sc._in_bands(np.array([z.real]))[0]
        key = (round(z.real, 7), round(z.imag, 7), 0 if glued else s)
        if key in seen:
            continue
        seen.append(key)
        report.mm_sharp_zero_violations.append(Violation("mm_sharp_zero", complex(z), s, float(v)))

    band_hits = list(bpoles)
    uniq = []
    for z, s, order, chart in poles:
        on_band = abs(z.imag) <= 1e-7 and sc._in_bands(np.array([z.real]))[0]
        if on_band:
            band_hits.append(z)
            continue
        if any(abs(z - u[0]) <= 1e-7 * (1 + abs(z)) and s == u[1] for u in uniq):
            continue
        uniq.append((z, s, order))
    report.poles = [(_snap(z), s, int(k)) for z, s, k in uniq]
    done = []
    for z in band_hits:
        if any(abs(z - d) <= 1e-7 for d in done):
            continue
        done.append(z)
        val = abs(sc.chart_m("glued", np.array([z]), 1)[0])
        report.band_pole_violations.append(Violation("band_pole", complex(z.real, 0.0), 0, float(val)))

    for z, s, _ in uniq:
        partner = [u for u in uniq if _is_sharp_match(z, s, u[0], u[1])]
        zs = np.conj(z)
        if not partner:
            inv = lambda w, s=-s: 1.0 / sc.chart_m("sheet", w, s)
            w = sc.newton(inv, zs, 1e-3, 1e-4 * (1 + abs(zs)))
            hit = w is not None and abs(sc.chart_m("sheet", np.array([w]), -s)[0]) > POLE_THRESHOLD
        else:
            hit = True
        if hit and not any(abs(v.location - zs) <= 1e-6 * (1 + abs(zs)) for v in report.sharp_pair_pole_violations):
            report.sharp_pair_pole_violations.append(Violation("sharp_pair_pole", complex(z), s, POLE_THRESHOLD))

    near = [z for z, _, _ in zeros] + [z for z, _, _ in uniq]
    for e, pole_order, zero_order in sc.edge_orders(near):
        report.band_edge_pole_orders.append((e, pole_order))
        if zero_order > 1:
            report.mm_sharp_zero_violations.append(Violation("edge_zero_order", complex(e), 0, float(zero_order)))
    report.samples_used = sc.evals
    return report
