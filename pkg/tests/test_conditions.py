import numpy as np
import pytest

from fgs.conditions import SamplerConfig, check_conditions
from fgs.jacobi import FREE, PerturbedJacobi, PeriodicTail, as_operator
from fgs.mfunction import m_coefficients, m_values
from fgs.periodic import band_structure, discriminant
from fgs.polycore import Poly, poly_roots
from fgs.surface import sqrt_disc_values

from conftest import FREE_PJ, J2_PJ, random_eventual

FREE_D = discriminant(FREE_PJ)
Z = Poly([0.0, 1.0])
ONE, ZERO = Poly.constant(1.0), Poly.constant(0.0)


def m_free(z, s):
    return m_values(FREE, z, s)


def pole_polynomial(J):
    """Leading coefficient of the quadratic satisfied by m.

    m is a Moebius image of the tail m-function; composing the one-step maps
    with polynomial entries and substituting into the tail's quadratic gives
    ``A m**2 + B m + C = 0``; the poles of m lie over the roots of A.
    """
    c = m_coefficients(J.tail_start())
    M = [[ONE, ZERO], [ZERO, ONE]]
    for k in range(1, J.prefix_len + 1):
        a, b = float(J.a(k)), float(J.b(k))
        S = [[ZERO, ONE], [Poly.constant(-a * a), Poly.constant(b) - Z]]
        M = [[M[i][0] * S[0][j] + M[i][1] * S[1][j] for j in range(2)] for i in range(2)]
    c21, c22 = M[1]
    return c.alpha * c22 * c22 - c.beta * c22 * c21 + c.gamma * c21 * c21


CLEAN = [
    FREE,
    PerturbedJacobi((1,), (3,), PeriodicTail(FREE_PJ, 0)),
    as_operator(J2_PJ),
    PerturbedJacobi((0.7, 1.4), (0.5, -2.0), PeriodicTail(J2_PJ, 1)),
    PerturbedJacobi((2.0, 0.4, 1.1), (-1.0, 0.3, 0.0), PeriodicTail(J2_PJ, 0)),
]


@pytest.mark.parametrize("J", CLEAN)
def test_eventually_periodic_operators_pass(J):
    r = check_conditions(J)
    assert r.ok, r.violations
    assert r.continuation_ok
    assert all(order <= 1 for _, order in r.band_edge_pole_orders)
    assert r.samples_used > 0


def test_single_pole_example():
    r = check_conditions(CLEAN[1])
    assert len(r.poles) == 1
    z, sheet, order = r.poles[0]
    assert abs(z - 10 / 3) < 1e-8 and sheet == 1 and order == 1
    assert not r.sharp_pair_pole_violations


@pytest.mark.parametrize("seed", range(12))
def test_poles_match_algebraic_oracle(seed):
    rng = np.random.default_rng(1000 + seed)
    J = random_eventual(rng, int(rng.integers(1, 4)))
    r = check_conditions(J)
    assert r.ok, r.violations
    edges = band_structure(discriminant(J.tail_start())).branch_points
    x0, y0, x1, y1 = r.region
    want = [
        w
        for w in poly_roots(pole_polynomial(J))
        if np.min(np.abs(w - edges)) > 1e-6 and x0 < w.real < x1 and y0 < w.imag < y1
    ]
    got = [z for z, _, _ in r.poles]
    assert len(got) == len(want)
    for w in want:
        assert min(abs(w - g) for g in got) < 1e-6
    for z, s, _ in r.poles:
        assert abs(m_values(J, np.array([z + 1e-9]), s)[0]) > 1e5


def test_band_pole_is_flagged():
    r = check_conditions(lambda z, s: m_free(z, s) + 0.3 / (np.asarray(z) - 0.5), delta=FREE_D)
    assert not r.ok
    assert any(abs(v.location - 0.5) < 1e-3 for v in r.band_pole_violations)


def test_symmetric_function_is_flagged():
    f = lambda z, s: m_free(z, s) + np.conj(m_free(np.conj(z), -s))
    r = check_conditions(f, delta=FREE_D)
    assert not r.ok
    assert [v.kind for v in r.mm_sharp_zero_violations] == ["mm_sharp_identically_zero"]


def test_double_edge_zero_is_flagged():
    # m - m# = sqrt(z**2 - 4) (z - 2): order three at the edge 2
    f = lambda z, s: (-np.asarray(z) + sqrt_disc_values(FREE_D, z, s) * (np.asarray(z) - 2)) / 2
    r = check_conditions(f, delta=FREE_D)
    hits = [v for v in r.mm_sharp_zero_violations if v.kind == "edge_zero_order"]
    assert len(hits) == 1 and abs(hits[0].location - 2) < 1e-3 and hits[0].value == 3


@pytest.mark.parametrize(
    "q, roots",
    [
        (lambda z: z - 3, [(3, 1), (3, -1)]),
        (lambda z: (z - 1) ** 2 + 0.25, [(1 + 0.5j, 1), (1 - 0.5j, 1), (1 + 0.5j, -1), (1 - 0.5j, -1)]),
        (lambda z: z - 0.5, [(0.5, None)]),
    ],
)
def test_isolated_zeros_of_m_minus_sharp(q, roots):
    # m - m# = sqrt(z**2 - 4) q(z) exactly
    f = lambda z, s: (-np.asarray(z) + sqrt_disc_values(FREE_D, z, s) * q(np.asarray(z))) / 2
    r = check_conditions(f, delta=FREE_D)
    found = [(v.location, v.sheet) for v in r.mm_sharp_zero_violations]
    assert len(found) == len(roots)
    for z0, s0 in roots:
        assert any(abs(z - z0) < 1e-6 and (s0 is None or s == s0) for z, s in found)


def test_sharp_pair_of_poles_is_flagged():
    # the same pole on both sheets over a real gap point: x and x# both poles
    f = lambda z, s: m_free(z, s) + 0.3 / (np.asarray(z) - 3)
    r = check_conditions(f, delta=FREE_D)
    assert any(abs(v.location - 3) < 1e-3 for v in r.sharp_pair_pole_violations)


def test_double_pole_at_edge_is_flagged():
    f = lambda z, s: m_free(z, s) + 0.1 / (np.asarray(z) - 2)
    r = check_conditions(f, delta=FREE_D)
    orders = dict(r.band_edge_pole_orders)
    assert orders[2.0] == 2 and not r.ok


def test_finite_region_restricts_the_scan():
    J = CLEAN[1]
    # 10/3 = w + 1/w with w = 3, so the pole leaves E_R for R < 3
    assert len(check_conditions(J, R=2.5).poles) == 0
    assert len(check_conditions(J, R=4.0).poles) == 1


def test_callable_needs_a_discriminant():
    with pytest.raises(ValueError):
        check_conditions(m_free)


def test_report_is_deterministic():
    a = check_conditions(CLEAN[3], config=SamplerConfig(resolution=120))
    b = check_conditions(CLEAN[3], config=SamplerConfig(resolution=120))
    assert a.poles == b.poles and a.samples_used == b.samples_used
