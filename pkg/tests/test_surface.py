import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fgs.periodic import band_structure, discriminant
from fgs.polycore import Poly
from fgs.surface import (
    Region,
    Sheet,
    SurfacePoint,
    er_levelset,
    er_membership,
    joukowski_coord,
    lift_preimage,
    sharp,
    sqrt_disc,
)

from conftest import J2_PJ, random_periodic

Z = Poly([0.0, 1.0])
Z2M3 = Poly([-3.0, 0.0, 1.0])


def transported_sqrt(d, z, steps=4000):
    # follow s**2 = d**2 - 4 by continuity from a far point on the positive axis
    X = 50.0 + abs(z)
    path = np.concatenate(
        [
            X + 1j * np.linspace(0, z.imag, steps),
            np.linspace(X, z.real, steps) + 1j * z.imag,
        ]
    )
    t = d(path[0])
    s = t * np.sqrt(1 - 4 / t**2)
    for w in path[1:]:
        r = np.sqrt(d(w) ** 2 - 4)
        s = r if abs(r - s) < abs(r + s) else -r
    return s


def test_sharp_examples():
    assert sharp(SurfacePoint.on(Z, 3.0)) == SurfacePoint(3.0, Sheet.MINUS)
    assert sharp(SurfacePoint.on(Z, 2 + 1j)) == SurfacePoint(2 - 1j, Sheet.MINUS)
    x = SurfacePoint.on(Z, 1.5, Sheet.MINUS)
    assert x.on_cut and sharp(x) == x
    assert SurfacePoint.on(Z, 1.5, Sheet.PLUS) == x


def test_sqrt_disc_examples():
    assert sqrt_disc(Z, SurfacePoint.on(Z, 3.0)) == pytest.approx(math.sqrt(5))
    assert sqrt_disc(Z2M3, SurfacePoint.on(Z2M3, 3.0)) == pytest.approx(math.sqrt(32))
    assert sqrt_disc(Z2M3, SurfacePoint.on(Z2M3, 3.0, Sheet.MINUS)) == pytest.approx(-math.sqrt(32))


@pytest.mark.parametrize("p", [1, 2, 3, 4])
def test_sqrt_disc_agrees_with_transport(rng, p):
    d = discriminant(random_periodic(rng, p))
    lo, hi = band_structure(d).hull
    for _ in range(6):
        z = complex(rng.uniform(lo - 1, hi + 1), rng.uniform(0.05, 1.5) * rng.choice([-1, 1]))
        assert sqrt_disc(d, SurfacePoint(z, Sheet.PLUS)) == pytest.approx(transported_sqrt(d, z), rel=1e-8)


@settings(max_examples=100, deadline=None)
@given(
    st.floats(-4, 4),
    st.floats(-3, 3).filter(lambda y: abs(y) > 1e-6),
    st.sampled_from([Sheet.PLUS, Sheet.MINUS]),
)
def test_sqrt_disc_square_and_reflection(x, y, sheet):
    d = Z2M3
    z = complex(x, y)
    s = sqrt_disc(d, SurfacePoint(z, sheet))
    t = d(z)
    assert abs(s * s - (t * t - 4)) <= 1e-10 * max(1.0, abs(t) ** 2)
    other = sqrt_disc(d, SurfacePoint(z.conjugate(), Sheet(-sheet)))
    assert other == pytest.approx(np.conj(-s), abs=1e-12)


def test_joukowski_examples():
    assert joukowski_coord(Z, 0.0) == pytest.approx(1j)
    assert joukowski_coord(Z, 3.0) == pytest.approx((3 + math.sqrt(5)) / 2)
    assert joukowski_coord(Z2M3, 3.0) == pytest.approx(3 + 2 * math.sqrt(2))


def test_joukowski_is_unimodular_on_bands(rng):
    d = discriminant(random_periodic(rng, 3))
    for lo, hi in band_structure(d).bands:
        for x in np.linspace(lo, hi, 7)[1:-1]:
            assert abs(abs(joukowski_coord(d, x)) - 1) < 1e-9


def test_green_function_is_harmonic_off_the_bands(rng):
    d = discriminant(random_periodic(rng, 3))
    p = d.degree
    h = 1e-3
    g = lambda z: math.log(abs(joukowski_coord(d, z))) / p
    for z in [0.4 + 0.5j, -2.5 + 0.3j, 1.0 - 1.2j, 3.5 + 0.01j]:
        lap = (g(z + h) + g(z - h) + g(z + 1j * h) + g(z - 1j * h) - 4 * g(z)) / h**2
        assert abs(lap) <= 1e-4


def test_membership_and_nesting(rng):
    d = Z2M3
    assert er_membership(d, 2.0, 0.0) in (Region.INSIDE, Region.OUTSIDE)
    assert er_membership(d, 2.0, 1.5) == Region.INSIDE
    assert er_membership(d, 2.0, 10.0) == Region.OUTSIDE
    z = 3.0
    R = abs(joukowski_coord(d, z))
    assert er_membership(d, R, z) == Region.BOUNDARY
    for z in rng.uniform(-4, 4, 40) + 1j * rng.uniform(-2, 2, 40):
        inside = [er_membership(d, R, z) == Region.INSIDE for R in (1.1, 1.5, 3.0, 8.0)]
        assert inside == sorted(inside)


def test_ellipse_for_free_discriminant():
    ls = er_levelset(Z, 2.0, (-3, -2, 3, 2), 256)
    assert len(ls.polylines) == 1 and not ls.clipped
    pts = ls.polylines[0]
    # closed, counter-clockwise
    assert np.allclose(pts[0], pts[-1])
    x, y = pts[:, 0], pts[:, 1]
    assert np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]) > 0
    assert np.max(np.abs((x / 2.5) ** 2 + (y / 1.5) ** 2 - 1)) < 1e-2


def test_contour_count_changes_at_critical_level():
    # boundary of E_R passes through the critical point when R + 1/R = 3
    assert len(er_levelset(Z2M3, 1.05, (-3, -1, 3, 1), 256).polylines) == 2
    assert len(er_levelset(Z2M3, 10.0, (-5, -5, 5, 5), 256).polylines) == 1


def test_marching_squares_matches_scikit_image():
    measure = pytest.importorskip("skimage.measure")
    xs = np.linspace(-3, 3, 200)
    ys = np.linspace(-1.5, 1.5, 200)
    Zg = xs[None, :] + 1j * ys[:, None]
    vals = np.abs(joukowski_coord(Z2M3, Zg)) - 1.5
    ref = measure.find_contours(vals, 0.0)
    ours = er_levelset(Z2M3, 1.5, (-3, -1.5, 3, 1.5), 200)
    assert len(ours.polylines) == len(ref)
    # same curves up to the index-to-coordinate map
    dx, dy = xs[1] - xs[0], ys[1] - ys[0]
    ref_xy = [np.column_stack([xs[0] + c[:, 1] * dx, ys[0] + c[:, 0] * dy]) for c in ref]
    for pl in ours.polylines:
        best = min(ref_xy, key=lambda r: abs(r[:, 0].mean() - pl[:, 0].mean()))
        d = np.min(np.abs((pl[:, None, 0] - best[None, :, 0]) + 1j * (pl[:, None, 1] - best[None, :, 1])), axis=1)
        assert d.max() < 1e-9


def test_levelset_warns_when_box_misses_bands():
    with pytest.warns(UserWarning):
        ls = er_levelset(Z, 2.0, (0, -2, 3, 2), 64)
    assert ls.clipped


def test_levelset_rejects_coarse_grids():
    with pytest.raises(ValueError):
        er_levelset(Z, 2.0, (-3, -2, 3, 2), 8)


def test_lift_preimage_keeps_sheet():
    lam = SurfacePoint(6.0 + 0.5j, Sheet.MINUS)
    x = lift_preimage(Z2M3, lam, 0)
    assert x.sheet == Sheet.MINUS
    assert Z2M3(x.z) == pytest.approx(lam.z)
    with pytest.raises(ValueError):
        lift_preimage(Z2M3, SurfacePoint(-3.0), 0)
