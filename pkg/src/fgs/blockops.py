"""Block Jacobi matrices ``delta(J)`` and the identities tying them to ``J``."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from .jacobi import PeriodicJacobi, PerturbedJacobi, as_operator, op_first_kind, op_second_kind
from .mfunction import m_values
from .periodic import band_structure, delta_preimages
from .polycore import Poly, poly_eval
from .surface import IDENTITY, Sheet, SurfacePoint, lift_all, sharp, sqrt_disc_values

_FREE_TOL = 1e-10


@dataclass(frozen=True)
class EventuallyFree:
    """Blocks after index ``N`` are ``A = I`` and ``B = 0``."""

    N: int


@dataclass(frozen=True)
class Window:
    """Only the stored blocks are known."""

    length: int


BlockTail = Union[EventuallyFree, Window]


@dataclass(frozen=True, eq=False)
class BlockJacobi:
    blocks_A: tuple
    blocks_B: tuple
    tail: BlockTail
    p: int

    def A(self, n: int) -> np.ndarray:
        if n <= len(self.blocks_A):
            return self.blocks_A[n - 1]
        if isinstance(self.tail, EventuallyFree):
            return np.eye(self.p)
        raise IndexError(f"block {n} is outside the stored window")

    def B(self, n: int) -> np.ndarray:
        if n <= len(self.blocks_B):
            return self.blocks_B[n - 1]
        if isinstance(self.tail, EventuallyFree):
            return np.zeros((self.p, self.p))
        raise IndexError(f"block {n} is outside the stored window")

    def matrix(self, n_blocks: int) -> np.ndarray:
        p = self.p
        M = np.zeros((n_blocks * p, n_blocks * p))
        for n in range(1, n_blocks + 1):
            r = slice((n - 1) * p, n * p)
            M[r, r] = self.B(n)
            if n < n_blocks:
                c = slice(n * p, (n + 1) * p)
                M[r, c] = self.A(n)
                M[c, r] = self.A(n).T
        return M


def _poly_of_matrix(poly: Poly, X: np.ndarray) -> np.ndarray:
    M = np.zeros_like(X)
    eye = np.eye(X.shape[0])
    for c in reversed(poly.coeffs):
        M = M @ X + float(np.real(c)) * eye
    return M


def _is_free(A: np.ndarray, B: np.ndarray) -> bool:
    p = A.shape[0]
    return np.abs(A - np.eye(p)).max() <= _FREE_TOL and np.abs(B).max() <= _FREE_TOL


def block_from_poly(J, poly: Poly, n_blocks: int, p: int | None = None) -> BlockJacobi:
    """Cut ``poly(J)`` into ``p x p`` blocks.

    ``p`` defaults to the degree of ``poly``.  When the blocks become
    ``A = I``, ``B = 0`` after the prefix, the result records an
    :class:`EventuallyFree` tail and keeps only the leading blocks.

    Raises
    ------
    ValueError
        If ``poly(J)`` is wider than one block off the diagonal.
    """
    J = as_operator(J)
    if p is None:
        p = poly.degree
    if p < 1:
        raise ValueError("block size must be positive")
    deg = max(poly.degree, 0)
    n_total = n_blocks
    if J.has_periodic_tail:
        affected = math.ceil((J.prefix_len + deg) / p) + 1
        n_total = max(n_blocks, affected + 2)
    size = (n_total + 1) * p + deg + 1
    X = J.matrix(size)
    M = _poly_of_matrix(poly, X)
    keep = (n_total + 1) * p
    i, j = np.indices((keep, keep))
    if np.abs(M[:keep, :keep][np.abs(i - j) > p]).max(initial=0.0) > _FREE_TOL:
        raise ValueError("polynomial degree/period mismatch")
    As, Bs = [], []
    for n in range(1, n_total + 1):
        r = slice((n - 1) * p, n * p)
        c = slice(n * p, (n + 1) * p)
        Bs.append(M[r, r].copy())
        As.append(M[r, c].copy())
    if J.has_periodic_tail:
        last = 0
        for n in range(n_total, 0, -1):
            if not _is_free(As[n - 1], Bs[n - 1]):
                last = n
                break
        if last <= n_total - 2:
            return BlockJacobi(tuple(As[:last]), tuple(Bs[:last]), EventuallyFree(last), p)
    return BlockJacobi(tuple(As[:n_blocks]), tuple(Bs[:n_blocks]), Window(n_blocks), p)


def matrix_ops_eval(BJ: BlockJacobi, n: int, lam: complex):
    """Matrix orthonormal polynomials of both kinds at ``lam``.

    Returns lists ``P[0..n]`` and ``Q[0..n]`` of right polynomials with
    ``P[0] = I``, ``P[1] = (lam - B_1) A_1^{-*}``, ``Q[0] = 0``,
    ``Q[1] = A_1^{-*}``.
    """
    p = BJ.p
    eye = np.eye(p, dtype=complex)

    def adj_inv(k):
        A = BJ.A(k)
        if abs(np.linalg.det(A)) < 1e-14:
            raise np.linalg.LinAlgError(f"block A_{k} is singular")
        return np.linalg.inv(A.conj().T)

    P = [eye]
    Q = [np.zeros((p, p), dtype=complex)]
    if n >= 1:
        P.append((lam * eye - BJ.B(1)) @ adj_inv(1))
        Q.append(adj_inv(1).astype(complex))
    for k in range(1, n):
        inv = adj_inv(k + 1)
        P.append((lam * P[k] - P[k] @ BJ.B(k + 1) - P[k - 1] @ BJ.A(k)) @ inv)
        Q.append((lam * Q[k] - Q[k] @ BJ.B(k + 1) - Q[k - 1] @ BJ.A(k)) @ inv)
    return P, Q


def _free_scalar(lam: SurfacePoint) -> complex:
    z = lam.z
    s = complex(sqrt_disc_values(IDENTITY, np.array([z]), lam.sheet)[0])
    # -2 / (z + s) avoids cancellation when z and s agree
    if abs(z + s) >= abs(z - s):
        return -2.0 / (z + s)
    return (s - z) / 2


def m_delta_eval(BJ: BlockJacobi, lam: SurfacePoint) -> np.ndarray:
    """Matrix m-function of an eventually free block Jacobi matrix."""
    if not isinstance(BJ.tail, EventuallyFree):
        raise ValueError("matrix m-function needs an eventually free tail")
    p = BJ.p
    eye = np.eye(p, dtype=complex)
    m = _free_scalar(lam) * eye
    z = lam.z
    for k in range(BJ.tail.N - 1, -1, -1):
        A = BJ.A(k + 1)
        m = np.linalg.inv(BJ.B(k + 1) - z * eye - A @ m @ A.conj().T)
    return m


def resolvent_block(BJ: BlockJacobi, i: int, j: int, lam: SurfacePoint) -> np.ndarray:
    """Block ``(i, j)`` of ``(BJ - lam)^{-1}`` from polynomials and ``m``."""
    n = max(i, j)
    z = lam.z
    m = m_delta_eval(BJ, lam)
    P, Q = matrix_ops_eval(BJ, n, z)
    Pc, Qc = matrix_ops_eval(BJ, n, np.conj(z))
    PL = [x.conj().T for x in Pc]
    QL = [x.conj().T for x in Qc]
    if i >= j:
        return QL[i - 1] @ P[j - 1] + PL[i - 1] @ m @ P[j - 1]
    return PL[i - 1] @ Q[j - 1] + PL[i - 1] @ m @ P[j - 1]


def _blocks_for(J, delta: Poly) -> tuple[BlockJacobi, BlockJacobi]:
    p = delta.degree
    BD = block_from_poly(J, delta, 2, p)
    BS = block_from_poly(J, delta.derivative(), 2, p)
    return BD, BS


def u_matrix(J, delta: Poly, lam: complex) -> np.ndarray:
    """``S_11 + P_1(lam) S_21`` with ``S`` the blocks of ``delta'(J)``."""
    BD, BS = _blocks_for(J, delta)
    S11 = BS.B(1)
    S21 = BS.A(1).T
    P1 = (lam * np.eye(BD.p) - BD.B(1)) @ np.linalg.inv(BD.A(1).T)
    return S11 + P1 @ S21


def _poly_vector(J, p: int, z: complex) -> np.ndarray:
    return np.array(op_first_kind(J, p - 1, z), dtype=complex)


def _eta(J, x: SurfacePoint) -> complex:
    m = m_values(J, np.array([x.z]), x.sheet)[0]
    y = sharp(x)
    ms = m_values(J, np.array([y.z]), y.sheet)[0]
    return complex(m - np.conj(ms))


def l_matrix(J, delta: Poly, lam: SurfacePoint) -> np.ndarray:
    """``sum_j (m - m#)(f_j(lam)) v_j v_j^T`` with ``v_j = (p_0, .., p_{p-1})(f_j)``."""
    p = delta.degree
    L = np.zeros((p, p), dtype=complex)
    for x in lift_all(delta, lam):
        v = _poly_vector(J, p, x.z)
        L += _eta(J, x) * np.outer(v, v)
    return L


def _resolvent_corner(J, p: int, x: SurfacePoint) -> np.ndarray:
    # top-left p x p corner of (J - z)^{-1}
    m = complex(m_values(J, np.array([x.z]), x.sheet)[0])
    P = np.array(op_first_kind(J, p - 1, x.z), dtype=complex)
    Q = np.array(op_second_kind(J, p - 1, x.z), dtype=complex)
    k = np.arange(p)
    hi = np.maximum.outer(k, k)
    lo = np.minimum.outer(k, k)
    return Q[hi] * P[lo] + np.outer(P, P) * m


def sum_identity_sides(J, delta: Poly, lam: SurfacePoint) -> tuple[np.ndarray, np.ndarray]:
    p = delta.degree
    lhs = sum(_resolvent_corner(J, p, x) for x in lift_all(delta, lam))
    BD, BS = _blocks_for(J, delta)
    mD = m_delta_eval(block_from_poly(J, delta, 2, p), lam)
    U = u_matrix(J, delta, lam.z)
    S21 = BS.A(1).T
    rhs = mD @ U + np.linalg.inv(BD.A(1).conj().T) @ S21
    return lhs, rhs


def verify_sum_identity(J, delta: Poly, lam: SurfacePoint) -> float:
    """Largest entry of ``sum_j M(f_j) - (m_delta U + A_1^{-*} S_21)``."""
    lhs, rhs = sum_identity_sides(J, delta, lam)
    return float(np.abs(lhs - rhs).max())


def m_delta_jump(J, delta: Poly, lam: SurfacePoint) -> np.ndarray:
    """``m_delta(lam) - m_delta(lam#)^*``."""
    BJ = block_from_poly(J, delta, 2)
    m = m_delta_eval(BJ, lam)
    ms = m_delta_eval(BJ, sharp(lam))
    return m - ms.conj().T


def u_zeros(J, delta: Poly) -> np.ndarray:
    """Finite zeros of ``det U``, from the pencil ``X + lam Y``."""
    X = u_matrix(J, delta, 0.0)
    Y = u_matrix(J, delta, 1.0) - X
    ev = sla.eigvals(X, -Y)
    ev = ev[np.isfinite(ev)]
    return np.sort_complex(ev)


@dataclass
class DetReport:
    """Measured constants of the three determinant identities.

    Each ``*_ratios`` list holds the ratio at every sample; ``*_spread`` is
    the largest relative distance from their mean.
    """

    u_ratios: list
    l_ratios: list
    jump_ratios: list
    u_constant: complex
    l_constant: complex
    jump_constant: complex
    u_spread: float
    l_spread: float
    jump_spread: float
    u_expected: float
    l_expected_stated: float
    l_expected_derived: float
    jump_expected_stated: float
    jump_expected_derived: float
    u_zeros: np.ndarray
    critical_values: tuple
    zero_mismatch: float
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return max(self.u_spread, self.l_spread, self.jump_spread, self.zero_mismatch) <= 1e-8


def _coupling_product(J, p: int) -> float:
    out = 1.0
    for j in range(1, p):
        out *= float(J.a(j)) ** (-2 * (p - j))
    return out


def _spread(vals: list) -> tuple[complex, float]:
    arr = np.array(vals, dtype=complex)
    mean = arr.mean()
    return complex(mean), float(np.abs(arr - mean).max() / max(abs(mean), 1e-300))


def verify_det_identities(J, delta: Poly, samples: Sequence[SurfacePoint]) -> DetReport:
    """Check that the three determinant ratios do not depend on ``lam``.

    For every sample ``lam`` the ratios

    * ``det U(lam) / prod(lam - delta(gamma_j))``
    * ``det L(lam) / (prod eta_j * prod(lam - delta(gamma_j)))``
    * ``det(m_delta - m_delta#)(lam) / prod eta_j``

    are formed, where ``eta_j = (m - m#)(f_j(lam))``.  The report gives the
    measured constants next to two closed forms: the commonly stated one and
    the one obtained from ``det U = prod delta'(f_j)`` and the Vandermonde
    determinant, which keeps the sign ``(-1)**(p(p-1)/2)``.
    """
    J = as_operator(J)
    bs = band_structure(delta)
    p = delta.degree
    c0 = bs.c0
    crit = bs.critical_values
    ur, lr, jr = [], [], []
    for lam in samples:
        pre = np.prod([lam.z - v for v in crit]) if crit else 1.0
        etas = np.prod([_eta(J, x) for x in lift_all(delta, lam)])
        ur.append(np.linalg.det(u_matrix(J, delta, lam.z)) / pre)
        lr.append(np.linalg.det(l_matrix(J, delta, lam)) / (etas * pre))
        jr.append(np.linalg.det(m_delta_jump(J, delta, lam)) / etas)
    uc, us = _spread(ur)
    lc, ls = _spread(lr)
    jc, js = _spread(jr)
    zeros = u_zeros(J, delta)
    if crit:
        cost = np.abs(zeros[:, None] - np.array(crit)[None, :])
        if cost.shape[0] != cost.shape[1]:
            mismatch = math.inf
        else:
            r, c = linear_sum_assignment(cost)
            mismatch = float(cost[r, c].max())
    else:
        mismatch = 0.0 if len(zeros) == 0 else math.inf
    prod_a = _coupling_product(J, p)
    pairs = p * (p - 1) // 2
    # on the bands each eta_j is the upper-edge value; off them the limit
    # along a decreasing band lands on the lower edge and flips a sign
    all_cut = all(lam.on_cut for lam in samples)
    return DetReport(
        u_ratios=ur,
        l_ratios=lr,
        jump_ratios=jr,
        u_constant=uc,
        l_constant=lc,
        jump_constant=jc,
        u_spread=us,
        l_spread=ls,
        jump_spread=js,
        u_expected=p**p * c0 * (-1) ** (p * p - 1),
        l_expected_stated=p**p / c0**p * prod_a,
        l_expected_derived=(-1) ** (pairs + p - 1) * p**p * c0 ** (1 - p) * prod_a,
        jump_expected_stated=prod_a / c0**p,
        jump_expected_derived=prod_a / c0**p * (1 if all_cut else (-1) ** pairs),
        u_zeros=zeros,
        critical_values=crit,
        zero_mismatch=mismatch,
    )


def eig_relation_check(J, delta: Poly, lam: complex) -> float:
    """Distance between the spectrum of ``U(conj lam)^*`` and ``{delta'(f_j(lam))}``."""
    U = u_matrix(J, delta, np.conj(lam)).conj().T
    ev = np.linalg.eigvals(U)
    pre = delta_preimages(delta, lam)
    target = poly_eval(delta.derivative(), pre.values)
    cost = np.abs(ev[:, None] - np.asarray(target)[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


@dataclass(frozen=True)
class SmithOrders:
    kappas: tuple  # descending
    pole_order: int
    zero_order_det: int
    kernel_dim_at_point: int


_RADII = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5)


def smith_orders(f: Callable[[complex], np.ndarray], z0: complex, scale: float = 1.0) -> SmithOrders:
    """Local Smith-McMillan orders of a square meromorphic matrix function.

    Singular values are sampled on circles around ``z0``; the slope of their
    logarithms against ``log r`` gives the orders.  Circles on which the
    matrix is too badly conditioned to resolve its smallest singular value
    are skipped, so the usable radii range from ``1e-1`` down to ``1e-5``
    times ``scale``.  The sum of the orders is compared with the winding
    number of ``det f``.

    Raises
    ------
    ValueError
        If a slope is not within 0.2 of an integer or the winding check
        disagrees.
    """
    angles = 2 * np.pi * (np.arange(16) + 0.5) / 16
    logs, radii = [], []
    for r in _RADII:
        rr = r * scale
        sv = np.array([np.linalg.svd(np.asarray(f(z0 + rr * np.exp(1j * t))), compute_uv=False) for t in angles])
        if sv.min() <= 0 or (sv[:, 0] / sv[:, -1]).max() > 1e10:
            continue
        logs.append(np.log(sv).mean(axis=0))
        radii.append(rr)
        if len(radii) == 4:
            break
    if len(radii) < 2:
        raise ValueError("order estimation unreliable: matrix too ill-conditioned")
    x = np.log(np.array(radii))
    Y = np.array(logs)
    slopes = np.polyfit(x, Y, 1)[0]
    rounded = np.round(slopes)
    if np.abs(slopes - rounded).max() > 0.2:
        raise ValueError("order estimation unreliable: non-integer slope")
    kappas = tuple(int(k) for k in sorted(rounded, reverse=True))
    rw = radii[-1]
    n = 512
    ts = 2 * np.pi * np.arange(n + 1) / n
    dets = np.array([np.linalg.det(np.asarray(f(z0 + rw * np.exp(1j * t)))) for t in ts])
    winding = int(round(np.sum(np.diff(np.unwrap(np.angle(dets)))) / (2 * np.pi)))
    if winding != sum(kappas):
        raise ValueError("order estimation unreliable: winding number disagrees")
    pole = max(0, -min(kappas))
    kernel = sum(1 for k in kappas if k >= 1) if pole == 0 else 0
    return SmithOrders(kappas, pole, winding, kernel)
