"""Dense univariate polynomials with real or complex coefficients.

Coefficients are stored in ascending order.  The zero polynomial has an
empty coefficient tuple and degree ``-1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import matrix_balance

_CLUSTER_TOL = 1e-8


def _trim(coeffs: Iterable[complex]) -> tuple:
    out = list(coeffs)
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


@dataclass(frozen=True)
class Poly:
    """Polynomial ``c[0] + c[1] z + ... + c[n] z**n``.

    Only exact trailing zeros are trimmed, so ``degree`` is stable under
    round-off in the leading coefficient.
    """

    coeffs: tuple

    def __init__(self, coeffs: Sequence[complex] = ()):
        vals = []
        for c in coeffs:
            c = complex(c)
            vals.append(c.real if c.imag == 0 else c)
        object.__setattr__(self, "coeffs", _trim(vals))

    @classmethod
    def constant(cls, c: complex) -> "Poly":
        return cls([c])

    @classmethod
    def identity(cls) -> "Poly":
        return cls([0.0, 1.0])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> complex:
        if not self.coeffs:
            return 0.0
        return self.coeffs[-1]

    @property
    def is_real(self) -> bool:
        return all(isinstance(c, float) for c in self.coeffs)

    def __call__(self, z):
        return poly_eval(self, z)

    def derivative(self) -> "Poly":
        return poly_derivative(self)

    def roots(self) -> np.ndarray:
        return poly_roots(self)

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            return other
        return Poly([other])

    def __add__(self, other) -> "Poly":
        other = self._coerce(other)
        n = max(len(self.coeffs), len(other.coeffs))
        a = list(self.coeffs) + [0.0] * (n - len(self.coeffs))
        b = list(other.coeffs) + [0.0] * (n - len(other.coeffs))
        return Poly([x + y for x, y in zip(a, b)])

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly([-c for c in self.coeffs])

    def __sub__(self, other) -> "Poly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Poly":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Poly":
        other = self._coerce(other)
        if not self.coeffs or not other.coeffs:
            return Poly()
        out = [0.0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, x in enumerate(self.coeffs):
            for j, y in enumerate(other.coeffs):
                out[i + j] += x * y
        return Poly(out)

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "Poly":
        return Poly([c / scalar for c in self.coeffs])

    def __repr__(self) -> str:
        return f"Poly({list(self.coeffs)!r})"


def poly_eval(poly: Poly, z):
    """Evaluate by Horner's rule; ``z`` may be a scalar or an array."""
    if not poly.coeffs:
        return z * 0 if isinstance(z, np.ndarray) else 0.0
    acc = poly.coeffs[-1]
    for c in reversed(poly.coeffs[:-1]):
        acc = acc * z + c
    if isinstance(z, np.ndarray) and not isinstance(acc, np.ndarray):
        acc = np.full(z.shape, acc)
    return acc


def poly_derivative(poly: Poly) -> Poly:
    return Poly([k * c for k, c in enumerate(poly.coeffs)][1:])


def _newton_polish(poly: Poly, dpoly: Poly, r: complex) -> complex:
    # one Newton step, kept only if it lowers the residual
    f = poly_eval(poly, r)
    df = poly_eval(dpoly, r)
    if df == 0:
        return r
    cand = r - f / df
    if abs(poly_eval(poly, cand)) < abs(f):
        return cand
    return r


def _cluster(roots: list[complex]) -> list[complex]:
    n = len(roots)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            tol = _CLUSTER_TOL * (1 + max(abs(roots[i]), abs(roots[j])))
            if abs(roots[i] - roots[j]) <= tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    out = list(roots)
    for members in groups.values():
        if len(members) > 1:
            centre = sum(roots[i] for i in members) / len(members)
            for i in members:
                out[i] = centre
    return out


def poly_roots(poly: Poly) -> np.ndarray:
    """All complex roots, repeated according to multiplicity.

    Parameters
    ----------
    poly : Poly
        Polynomial of degree at least one.

    Returns
    -------
    numpy.ndarray
        Complex roots sorted by real part, then imaginary part.  Roots
        closer than ``1e-8 * (1 + |r|)`` are merged into a cluster and
        reported at the cluster mean.

    Raises
    ------
    ValueError
        If the polynomial is constant or zero.
    """
    n = poly.degree
    if n < 1:
        raise ValueError("no roots defined for a constant polynomial")
    c = np.asarray(poly.coeffs, dtype=complex)
    monic = c[:-1] / c[-1]
    comp = np.zeros((n, n), dtype=complex)
    comp[1:, :-1] = np.eye(n - 1)
    comp[:, -1] = -monic
    if poly.is_real:
        comp = comp.real
    balanced, _ = matrix_balance(comp, permute=False)
    eig = np.linalg.eigvals(balanced)
    dpoly = poly_derivative(poly)
    polished = [_newton_polish(poly, dpoly, complex(r)) for r in eig]
    clustered = _cluster(polished)
    if poly.is_real:
        # exact real roots stay real
        clustered = [
            complex(r.real, 0.0) if abs(r.imag) <= 1e-14 * (1 + abs(r)) else r
            for r in clustered
        ]
    clustered.sort(key=lambda r: (r.real, r.imag))
    return np.array(clustered, dtype=complex)
