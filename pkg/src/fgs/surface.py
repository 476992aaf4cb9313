"""The two-sheeted surface of ``w**2 = delta(z)**2 - 4`` and its level sets.

A point is a complex number with a sheet tag.  Points on the bands are
glued across the sheets: they compare equal regardless of the tag and are
evaluated as limits from the upper half of the physical sheet.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from ._contour import marching_squares
from .periodic import band_structure, delta_preimages
from .polycore import Poly, poly_eval

CUT_TOL = 1e-12
IDENTITY = Poly.identity()


class Sheet(enum.IntEnum):
    MINUS = -1
    PLUS = 1


class Region(enum.Enum):
    INSIDE = "inside"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


@dataclass(frozen=True, eq=False)
class SurfacePoint:
    z: complex
    sheet: Sheet = Sheet.PLUS
    on_cut: bool = False

    def __post_init__(self):
        object.__setattr__(self, "z", complex(self.z))
        object.__setattr__(self, "sheet", Sheet(int(self.sheet)))

    @classmethod
    def on(cls, delta: Poly, z: complex, sheet: int = Sheet.PLUS) -> "SurfacePoint":
        """Build a point over ``z``, detecting whether it lies on a band."""
        z = complex(z)
        cut = on_bands(delta, z)
        if cut:
            z = complex(z.real, 0.0)
        return cls(z, Sheet(int(sheet)), cut)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SurfacePoint):
            return NotImplemented
        if self.on_cut and other.on_cut:
            return self.z == other.z
        return (self.z, self.sheet, self.on_cut) == (other.z, other.sheet, other.on_cut)

    def __hash__(self) -> int:
        return hash((self.z, self.on_cut) if self.on_cut else (self.z, self.sheet))


def on_bands(delta: Poly, z) -> bool:
    z = complex(z)
    if abs(z.imag) > CUT_TOL:
        return False
    return band_structure(delta).contains(z.real, CUT_TOL)


def _cut_mask(delta: Poly, z: np.ndarray) -> np.ndarray:
    bs = band_structure(delta)
    real = np.abs(z.imag) <= CUT_TOL
    inb = np.zeros(z.shape, dtype=bool)
    for lo, hi in bs.bands:
        inb |= (z.real >= lo - CUT_TOL) & (z.real <= hi + CUT_TOL)
    return real & inb


def sharp(x: SurfacePoint) -> SurfacePoint:
    """The anti-holomorphic involution: conjugate and swap sheets."""
    if x.on_cut:
        return x
    return SurfacePoint(x.z.conjugate(), Sheet(-int(x.sheet)), False)


def sqrt_disc_values(delta: Poly, z, sheet: int) -> np.ndarray:
    """Vectorised branch of ``sqrt(delta(z)**2 - 4)`` on one sheet.

    On the plus sheet the value behaves like ``delta(z)`` at ``+inf``; it is
    the product ``c0 * prod(sqrt(z - e_k))`` over the band edges, which is
    single valued off the bands.  Points on the bands take the value from
    the upper half of the plus sheet whatever ``sheet`` says.
    """
    bs = band_structure(delta)
    z = np.asarray(z, dtype=complex)
    cut = _cut_mask(delta, z)
    # a signed-zero imaginary part selects the upper edge of each factor
    zz = np.where(np.abs(z.imag) <= CUT_TOL, z.real + 0j, z)
    s = np.full(z.shape, bs.c0, dtype=complex)
    for e in bs.edges:
        s = s * np.sqrt(zz - e)
    return np.where(cut, s, int(sheet) * s)


def sqrt_disc(delta: Poly, x: SurfacePoint) -> complex:
    return complex(sqrt_disc_values(delta, np.array([x.z]), x.sheet)[0])


def joukowski_coord(delta: Poly, z):
    """Solve ``w + 1/w = delta(z)`` with ``|w| >= 1``; on the unit circle
    the root with non-negative imaginary part is returned."""
    scalar = np.isscalar(z)
    t = np.asarray(poly_eval(delta, np.asarray(z, dtype=complex)), dtype=complex)
    r = np.sqrt(t * t - 4)
    w = np.where(np.abs(t + r) >= np.abs(t - r), (t + r) / 2, (t - r) / 2)
    unit = np.abs(np.abs(w) - 1) <= 1e-12
    w = np.where(unit & (w.imag < 0), 1 / np.where(w == 0, 1, w), w)
    return complex(w) if scalar else w


def er_membership(delta: Poly, R: float, x) -> Region:
    """Locate ``x`` relative to ``E_R = {z : |w(z)| < R}``."""
    if R <= 1:
        raise ValueError("R must exceed 1")
    z = x.z if isinstance(x, SurfacePoint) else complex(x)
    gap = abs(joukowski_coord(delta, z)) - R
    if abs(gap) <= 1e-9 * R:
        return Region.BOUNDARY
    return Region.INSIDE if gap < 0 else Region.OUTSIDE


def er_bbox(delta: Poly, R: float, margin: float = 0.05) -> tuple[float, float, float, float]:
    """Bounding box of ``E_R``, from the preimages of its boundary ellipse."""
    theta = np.linspace(0, 2 * np.pi, 256, endpoint=False)
    w = R * np.exp(1j * theta)
    lam = w + 1 / w
    pts = np.concatenate([(delta - complex(v)).roots() for v in lam])
    x0, x1 = pts.real.min(), pts.real.max()
    y0, y1 = pts.imag.min(), pts.imag.max()
    pad = margin * max(x1 - x0, y1 - y0)
    return (float(x0 - pad), float(y0 - pad), float(x1 + pad), float(y1 + pad))


@dataclass(frozen=True)
class LevelSet:
    polylines: list  # (n, 2) arrays of (x, y)
    clipped: bool  # the box misses part of the bands or cuts a contour


def er_levelset(delta: Poly, R: float, bbox, resolution: int = 256) -> LevelSet:
    """Boundary curves of ``E_R`` traced on a ``resolution``-square grid.

    Parameters
    ----------
    delta : Poly
        Discriminant.
    R : float
        Level, greater than one.
    bbox : tuple
        ``(x0, y0, x1, y1)``.
    resolution : int
        Samples per axis, at least 16.
    """
    if resolution < 16:
        raise ValueError("resolution must be at least 16")
    if R <= 1:
        raise ValueError("R must exceed 1")
    x0, y0, x1, y1 = map(float, bbox)
    if not (x1 > x0 and y1 > y0):
        raise ValueError("empty bounding box")
    xs = np.linspace(x0, x1, resolution)
    ys = np.linspace(y0, y1, resolution)
    Z = xs[None, :] + 1j * ys[:, None]
    vals = np.abs(joukowski_coord(delta, Z)) - R
    dx, dy = xs[1] - xs[0], ys[1] - ys[0]

    def centre(i, j):
        zc = complex(xs[j] + dx / 2, ys[i] + dy / 2)
        return abs(joukowski_coord(delta, zc)) - R

    lines = marching_squares(vals, xs, ys, centre)
    lo, hi = band_structure(delta).hull
    clipped = not (x0 <= lo and hi <= x1 and y0 <= 0 <= y1)
    clipped = clipped or any(not np.allclose(pl[0], pl[-1]) for pl in lines)
    if clipped:
        warnings.warn("bounding box does not contain the whole level set", stacklevel=2)
    return LevelSet(lines, clipped)


def lift_preimage(delta: Poly, lam: SurfacePoint, j: int) -> SurfacePoint:
    """Preimage ``f_j`` of a point of the base surface, kept on its sheet.

    ``j`` is zero based.
    """
    pre = delta_preimages(delta, lam.z)
    if pre.critical:
        raise ValueError("branch labels undefined at a critical value")
    return SurfacePoint.on(delta, pre.values[j], lam.sheet)


def lift_all(delta: Poly, lam: SurfacePoint) -> list[SurfacePoint]:
    pre = delta_preimages(delta, lam.z)
    if pre.critical:
        raise ValueError("branch labels undefined at a critical value")
    return [SurfacePoint.on(delta, f, lam.sheet) for f in pre.values]
