"""Jacobi operators: periodic data, eventually periodic perturbations,
orthonormal polynomials and the one-step m-function recursion."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .polycore import Poly

POLE = complex(math.inf, 0.0)


def is_pole(value) -> bool:
    """True when ``value`` is the point at infinity."""
    return bool(np.isinf(value))


def _check_positive(a: Sequence, what: str) -> None:
    for n, x in enumerate(a, start=1):
        if not x > 0:
            raise ValueError(f"coupling must be positive ({what} index {n})")


@dataclass(frozen=True)
class PeriodicJacobi:
    """Two-sided periodic Jacobi data ``a_1..a_p``, ``b_1..b_p``."""

    a: tuple
    b: tuple

    def __init__(self, a: Sequence[float], b: Sequence[float]):
        a, b = tuple(a), tuple(b)
        if len(a) != len(b) or not a:
            raise ValueError("a and b must have the same positive length")
        _check_positive(a, "a")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def p(self) -> int:
        return len(self.a)

    def rolled(self, shift: int) -> "PeriodicJacobi":
        """Periodic data read starting at offset ``shift``."""
        k = shift % self.p
        return PeriodicJacobi(self.a[k:] + self.a[:k], self.b[k:] + self.b[:k])


@dataclass(frozen=True)
class PeriodicTail:
    periodic: PeriodicJacobi
    phase: int = 0

    def __post_init__(self):
        object.__setattr__(self, "phase", self.phase % self.periodic.p)


@dataclass(frozen=True)
class Truncated:
    """The operator ends after the prefix."""


Tail = Union[PeriodicTail, Truncated]


@dataclass(frozen=True, eq=False)
class PerturbedJacobi:
    """One-sided Jacobi operator given by a finite prefix and a tail.

    Indices are 1-based: ``a(1)`` is the first off-diagonal coefficient.
    Coefficients are kept exactly as supplied (floats, ints or
    ``fractions.Fraction``) so deviations from the tail can be measured
    below double precision.
    """

    prefix_a: tuple
    prefix_b: tuple
    tail: Tail

    def __init__(self, prefix_a: Sequence = (), prefix_b: Sequence = (), tail: Tail | None = None):
        prefix_a, prefix_b = tuple(prefix_a), tuple(prefix_b)
        if len(prefix_a) != len(prefix_b):
            raise ValueError("prefix a and b must have the same length")
        _check_positive(prefix_a, "prefix a")
        if tail is None:
            tail = Truncated()
        object.__setattr__(self, "prefix_a", prefix_a)
        object.__setattr__(self, "prefix_b", prefix_b)
        object.__setattr__(self, "tail", tail)

    @classmethod
    def periodic(cls, pj: PeriodicJacobi) -> "PerturbedJacobi":
        return cls((), (), PeriodicTail(pj, 0))

    @property
    def prefix_len(self) -> int:
        return len(self.prefix_a)

    @property
    def has_periodic_tail(self) -> bool:
        return isinstance(self.tail, PeriodicTail)

    def _tail_index(self, n: int) -> int:
        if not isinstance(self.tail, PeriodicTail):
            raise IndexError(f"index {n} lies beyond a truncated operator")
        return (n - self.prefix_len - 1 + self.tail.phase) % self.tail.periodic.p

    def a(self, n: int):
        if n < 1:
            raise IndexError("indices start at 1")
        if n <= self.prefix_len:
            return self.prefix_a[n - 1]
        return self.tail.periodic.a[self._tail_index(n)]

    def b(self, n: int):
        if n < 1:
            raise IndexError("indices start at 1")
        if n <= self.prefix_len:
            return self.prefix_b[n - 1]
        return self.tail.periodic.b[self._tail_index(n)]

    def coefficients(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Float arrays ``a_1..a_n`` and ``b_1..b_n``."""
        a = np.array([float(self.a(k)) for k in range(1, n + 1)])
        b = np.array([float(self.b(k)) for k in range(1, n + 1)])
        return a, b

    def tail_start(self) -> PeriodicJacobi:
        """Periodic data seen right after the prefix."""
        if not isinstance(self.tail, PeriodicTail):
            raise ValueError("operator has no periodic tail")
        return self.tail.periodic.rolled(self.tail.phase)

    def asymptotic(self) -> PeriodicJacobi:
        """Periodic operator whose coefficients agree with the tail at every index."""
        if not isinstance(self.tail, PeriodicTail):
            raise ValueError("operator has no periodic tail")
        return self.tail.periodic.rolled(self.tail.phase - self.prefix_len)

    def matrix(self, n: int) -> np.ndarray:
        """Top-left ``n x n`` section."""
        a, b = self.coefficients(n)
        return np.diag(b) + np.diag(a[:-1], 1) + np.diag(a[:-1], -1)

    def normalized(self) -> "PerturbedJacobi":
        """Absorb trailing prefix entries that already agree with the tail."""
        if not isinstance(self.tail, PeriodicTail):
            return self
        pa, pb = list(self.prefix_a), list(self.prefix_b)
        pj, phase = self.tail.periodic, self.tail.phase
        while pa:
            prev = (phase - 1) % pj.p
            if pa[-1] == pj.a[prev] and pb[-1] == pj.b[prev]:
                pa.pop()
                pb.pop()
                phase = prev
            else:
                break
        return PerturbedJacobi(pa, pb, PeriodicTail(pj, phase))

    def _key(self):
        n = self.normalized()
        tail = n.tail
        if isinstance(tail, PeriodicTail):
            # a tail is characterised by the sequence it produces
            tail_key = (tail.periodic.rolled(tail.phase).a, tail.periodic.rolled(tail.phase).b)
            tail_key = _canonical_cycle(tail_key)
        else:
            tail_key = "truncated"
        return (n.prefix_a, n.prefix_b, tail_key)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PerturbedJacobi):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())


def _canonical_cycle(ab: tuple) -> tuple:
    # reduce a periodic sequence to its minimal period; phase is kept
    a, b = ab
    p = len(a)
    for q in range(1, p + 1):
        if p % q == 0 and all(a[i] == a[i % q] and b[i] == b[i % q] for i in range(p)):
            return (a[:q], b[:q])
    return (a, b)


def as_operator(J) -> PerturbedJacobi:
    """Accept periodic data wherever an operator is expected."""
    if isinstance(J, PeriodicJacobi):
        return PerturbedJacobi.periodic(J)
    return J


FREE = PerturbedJacobi.periodic(PeriodicJacobi((1.0,), (0.0,)))


def op_first_kind(J, n: int, z):
    """Values ``p_0(z), ..., p_n(z)`` of the orthonormal polynomials."""
    if n < 0:
        raise ValueError("n must be non-negative")
    J = as_operator(J)
    out = [z * 0 + 1.0]
    prev = z * 0
    a_prev = 0.0
    for k in range(n):
        ak1 = float(J.a(k + 1))
        nxt = ((z - float(J.b(k + 1))) * out[-1] - a_prev * prev) / ak1
        prev, a_prev = out[-1], ak1
        out.append(nxt)
    return out


def op_second_kind(J, n: int, z):
    """Values ``q_0(z), ..., q_n(z)`` with ``q_0 = 0`` and ``q_1 = 1/a_1``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    J = as_operator(J)
    out = [z * 0]
    if n == 0:
        return out
    out.append(z * 0 + 1.0 / float(J.a(1)))
    for k in range(1, n):
        ak, ak1 = float(J.a(k)), float(J.a(k + 1))
        out.append(((z - float(J.b(k + 1))) * out[-1] - ak * out[-2]) / ak1)
    return out


def first_kind_polys(J: PerturbedJacobi, n: int) -> list[Poly]:
    return op_first_kind(J, n, Poly.identity())


def second_kind_polys(J: PerturbedJacobi, n: int) -> list[Poly]:
    return op_second_kind(J, n, Poly.identity())


def wronskian(J, n: int, z) -> complex:
    """``a_n (p_n q_{n-1} - p_{n-1} q_n)``; equals -1 for every n >= 1."""
    p = op_first_kind(J, n, z)
    q = op_second_kind(J, n, z)
    return float(J.a(n)) * (p[n] * q[n - 1] - p[n - 1] * q[n])


def strip(J: PerturbedJacobi, k: int) -> PerturbedJacobi:
    """Remove the first ``k`` rows and columns."""
    if k < 0:
        raise ValueError("k must be non-negative")
    L = J.prefix_len
    if k <= L:
        return PerturbedJacobi(J.prefix_a[k:], J.prefix_b[k:], J.tail)
    if not isinstance(J.tail, PeriodicTail):
        raise ValueError("cannot strip past the end of a truncated operator")
    tail = PeriodicTail(J.tail.periodic, J.tail.phase + (k - L))
    return PerturbedJacobi((), (), tail)


def extend(J: PerturbedJacobi, a0, b0) -> PerturbedJacobi:
    """Prepend one row with coupling ``a0`` and diagonal entry ``b0``."""
    if not a0 > 0:
        raise ValueError("coupling must be positive")
    return PerturbedJacobi((a0,) + J.prefix_a, (b0,) + J.prefix_b, J.tail).normalized()


def m_step(m_next, a1, b1, z):
    """One step of the m-function recursion, ``1 / (b1 - z - a1**2 m_next)``.

    A pole on input gives 0; a vanishing denominator gives ``POLE``.
    """
    if is_pole(m_next):
        return 0j
    den = b1 - z - a1 * a1 * m_next
    if den == 0:
        return POLE
    return 1.0 / den


def m_step_array(m_next: np.ndarray, a1: float, b1: float, z: np.ndarray) -> np.ndarray:
    """Vectorised :func:`m_step`."""
    inf = np.isinf(m_next)
    safe = np.where(inf, 0.0, m_next)
    den = b1 - z - a1 * a1 * safe
    zero = den == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 1.0 / np.where(zero, 1.0, den)
    out = np.where(zero, POLE, out)
    return np.where(inf, 0j, out)


def m_unstep(m, a1, b1, z):
    """Inverse of :func:`m_step`: recover ``m_next`` from ``m``."""
    if is_pole(m):
        return (b1 - z) / (a1 * a1)
    if m == 0:
        return POLE
    return (b1 - z - 1.0 / m) / (a1 * a1)
