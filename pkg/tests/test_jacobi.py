from fractions import Fraction

import numpy as np
import pytest

from fgs.jacobi import (
    FREE,
    POLE,
    PeriodicTail,
    PerturbedJacobi,
    Truncated,
    extend,
    first_kind_polys,
    is_pole,
    m_step,
    m_unstep,
    op_first_kind,
    op_second_kind,
    strip,
    wronskian,
)

from conftest import FREE_PJ, J2_PJ, random_eventual

J2 = PerturbedJacobi.periodic(J2_PJ)


def test_free_polynomials():
    z = 0.7 + 0.2j
    np.testing.assert_allclose(op_first_kind(FREE, 2, z), [1, z, z * z - 1])
    np.testing.assert_allclose(op_second_kind(FREE, 2, z), [0, 1, z])


def test_period_two_polynomials():
    z = -0.4 + 1.1j
    np.testing.assert_allclose(op_first_kind(J2, 2, z), [1, z - 1, z * z - 2])
    np.testing.assert_allclose(op_second_kind(J2, 2, z), [0, 1, z + 1])


def test_polynomials_against_matrix_determinants(rng):
    # p_n(z) = det(z - J_n) / (a_1 ... a_n)
    J = random_eventual(rng, 3, prefix_len=2)
    z = 0.3 + 0.8j
    vals = op_first_kind(J, 6, z)
    for n in range(1, 7):
        a, _ = J.coefficients(n)
        det = np.linalg.det(z * np.eye(n) - J.matrix(n))
        assert abs(vals[n] - det / np.prod(a)) < 1e-10 * abs(vals[n])


def test_leading_coefficient(rng):
    J = random_eventual(rng, 2)
    polys = first_kind_polys(J, 5)
    for n, p in enumerate(polys):
        a, _ = J.coefficients(n)
        assert p.degree == n
        assert p.leading == pytest.approx(1 / np.prod(a))


def test_wronskian_is_constant(rng):
    J = random_eventual(rng, 3)
    for n in range(1, 8):
        assert wronskian(J, n, 0.4 - 0.9j) == pytest.approx(-1.0)


def test_indexing_with_phase():
    J = PerturbedJacobi((5.0,), (6.0,), PeriodicTail(J2_PJ, 1))
    assert [J.b(n) for n in range(1, 6)] == [6.0, -1.0, 1.0, -1.0, 1.0]
    assert J.a(1) == 5.0


def test_strip_and_extend():
    assert strip(PerturbedJacobi((2.0,), (3.0,), FREE.tail), 1) == FREE
    assert strip(FREE, 5) == FREE
    assert extend(FREE, 1.0, 0.0) == FREE
    ext = extend(FREE, 1.0, 1.0)
    assert ext.prefix_b == (1.0,) and ext.prefix_a == (1.0,)
    assert ext.tail == FREE.tail


def test_strip_consumes_prefix_then_shifts_phase():
    J = PerturbedJacobi((2.0, 3.0), (0.5, 0.6), PeriodicTail(J2_PJ, 0))
    s = strip(J, 3)
    assert s.prefix_len == 0
    assert [s.b(n) for n in (1, 2)] == [J.b(4), J.b(5)]


def test_strip_then_extend_roundtrip(rng):
    J = random_eventual(rng, 2, prefix_len=3)
    assert extend(strip(J, 1), J.a(1), J.b(1)) == J


def test_extend_rejects_nonpositive_coupling():
    with pytest.raises(ValueError, match="coupling must be positive"):
        extend(FREE, 0.0, 1.0)
    with pytest.raises(ValueError, match="coupling must be positive"):
        PerturbedJacobi((1.0, -1.0), (0.0, 0.0), Truncated())


def test_exact_coefficients_are_kept():
    J = PerturbedJacobi((1 + Fraction(1, 2**80),), (0,), FREE.tail)
    assert J.a(1) - 1 == Fraction(1, 2**80)


def test_m_step_values():
    assert m_step(-0.3819660112501051, 1, 1, 3) == pytest.approx(-0.6180339887498949, abs=1e-12)
    assert m_step(-2.618033988749895, 1, 1, 3) == pytest.approx(1.6180339887498949, abs=1e-12)


def test_m_step_poles():
    assert is_pole(m_step(2.0, 1.0, 1.0, -1.0))
    assert m_step(POLE, 1.0, 0.0, 0.5) == 0


def test_m_unstep_inverts_m_step():
    z = 0.2 + 0.7j
    m = -0.1 + 0.3j
    assert m_unstep(m_step(m, 1.3, 0.4, z), 1.3, 0.4, z) == pytest.approx(m)
