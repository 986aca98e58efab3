"""Pucci extremal operators on symmetric matrices of dimension at most 3.

Eigenvalues are computed in closed form (quadratic formula for 2x2,
trigonometric Cardano for 3x3) and every routine has a batched variant that
works on stacks of matrices with shape ``(..., n, n)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

ZERO_EIG_RTOL = 1e-14
CLUSTER_GAP = 1e-4
JACOBI_SWEEPS = 8


@dataclass(frozen=True)
class EllipticityPair:
    """Ellipticity constants ``0 < lam <= Lam``."""

    lam: float
    Lam: float

    def __post_init__(self):
        if not (0 < self.lam <= self.Lam) or not np.isfinite(self.Lam):
            raise ValueError(f"need 0 < lam <= Lam, got ({self.lam}, {self.Lam})")


class SymMatrix:
    """Symmetric ``n x n`` matrix (``n <= 3``), stored from its upper triangle."""

    __slots__ = ("_a",)

    def __init__(self, array):
        a = np.array(array, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or not 1 <= a.shape[0] <= 3:
            raise ValueError("expected a square matrix of size 1, 2 or 3")
        if not np.all(np.isfinite(a)):
            raise ValueError("entries must be finite")
        upper = np.triu(a)
        self._a = upper + np.triu(a, 1).T
        self._a.setflags(write=False)

    @classmethod
    def from_upper(cls, dim: int, entries: Sequence[float]) -> "SymMatrix":
        """Build from the row-major upper triangle, e.g. ``(a00, a01, a11)`` for 2x2."""
        a = np.zeros((dim, dim))
        a[np.triu_indices(dim)] = entries
        return cls(a)

    @property
    def dim(self) -> int:
        return self._a.shape[0]

    @property
    def array(self) -> np.ndarray:
        return self._a

    def __neg__(self):
        return SymMatrix(-self._a)

    def __add__(self, other):
        return SymMatrix(self._a + _as_array(other))

    def __mul__(self, c: float):
        return SymMatrix(float(c) * self._a)

    __rmul__ = __mul__

    def __repr__(self):
        return f"SymMatrix({self._a.tolist()})"


MatrixLike = Union[SymMatrix, np.ndarray, Sequence]


def _as_array(M: MatrixLike) -> np.ndarray:
    return M.array if isinstance(M, SymMatrix) else np.asarray(M, dtype=float)


def eigvals_batch(A: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of symmetric matrices with shape ``(..., n, n)``."""
    A = np.asarray(A, dtype=float)
    n = A.shape[-1]
    if n == 1:
        return A[..., 0, :].copy()
    if n == 2:
        a, b, d = A[..., 0, 0], A[..., 0, 1], A[..., 1, 1]
        mean = 0.5 * (a + d)
        rad = np.hypot(0.5 * (a - d), b)
        return np.stack([mean - rad, mean + rad], axis=-1)
    if n != 3:
        raise ValueError("dimension must be 1, 2 or 3")

    # normalize so the cubic invariants cannot overflow
    norm = np.max(np.abs(A), axis=(-2, -1))
    norm = np.where(norm > 0, norm, 1.0)
    A = A / norm[..., None, None]
    a00, a11, a22 = A[..., 0, 0], A[..., 1, 1], A[..., 2, 2]
    a01, a02, a12 = A[..., 0, 1], A[..., 0, 2], A[..., 1, 2]
    q = (a00 + a11 + a22) / 3.0
    p1 = a01 ** 2 + a02 ** 2 + a12 ** 2
    b00, b11, b22 = a00 - q, a11 - q, a22 - q
    p2 = b00 ** 2 + b11 ** 2 + b22 ** 2 + 2.0 * p1
    p = np.sqrt(p2 / 6.0)
    safe = np.where(p > 0, p, 1.0)
    det = (b00 * (b11 * b22 - a12 * a12)
           - a01 * (a01 * b22 - a12 * a02)
           + a02 * (a01 * a12 - b11 * a02))
    r = np.clip(det / (2.0 * safe ** 3), -1.0, 1.0)
    angle = np.arccos(r) / 3.0
    e_hi = q + 2.0 * p * np.cos(angle)
    e_lo = q + 2.0 * p * np.cos(angle + 2.0 * np.pi / 3.0)
    e_mid = 3.0 * q - e_hi - e_lo
    out = np.sort(np.stack([e_lo, e_mid, e_hi], axis=-1), axis=-1)
    # near-repeated pairs lose half the digits in arccos; redo those by rotations
    close = np.min(np.diff(out, axis=-1), axis=-1) < CLUSTER_GAP
    if np.any(close):
        out[close] = _jacobi_eigvals(A[close])
    return out * norm[..., None]


def _jacobi_eigvals(A: np.ndarray, sweeps: int = JACOBI_SWEEPS) -> np.ndarray:
    """Cyclic Jacobi rotations on a stack of symmetric 3x3 matrices."""
    A = np.array(A, dtype=float)
    idx = np.arange(len(A))
    for _ in range(sweeps):
        for p, q in ((0, 1), (0, 2), (1, 2)):
            apq = A[:, p, q]
            live = apq != 0
            # a negligible apq can overflow theta to inf, which correctly gives t = 0
            with np.errstate(over="ignore"):
                theta = np.where(live, (A[:, q, q] - A[:, p, p])
                                 / (2 * np.where(live, apq, 1.0)), 0.0)
            t = np.where(live, np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0)), 0.0)
            t = np.where(live & (theta == 0), 1.0, t)
            c = 1 / np.hypot(t, 1.0)
            s = t * c
            J = np.broadcast_to(np.eye(3), A.shape).copy()
            J[idx, p, p] = c
            J[idx, q, q] = c
            J[idx, p, q] = s
            J[idx, q, p] = -s
            A = np.einsum("nji,njk,nkl->nil", J, A, J)
    return np.sort(np.diagonal(A, axis1=-2, axis2=-1), axis=-1)


def eigenvalues_sym(M: MatrixLike) -> np.ndarray:
    """Ascending real eigenvalues of a symmetric matrix of size <= 3."""
    return eigvals_batch(_as_array(M))


def _weighted(eigs: np.ndarray, pos_weight: float, neg_weight: float) -> np.ndarray:
    scale = np.max(np.abs(eigs), axis=-1, keepdims=True)
    e = np.where(np.abs(eigs) <= ZERO_EIG_RTOL * scale, 0.0, eigs)
    return (pos_weight * np.where(e > 0, e, 0.0).sum(axis=-1)
            + neg_weight * np.where(e < 0, e, 0.0).sum(axis=-1))


def pucci_minus_batch(A: np.ndarray, e: EllipticityPair) -> np.ndarray:
    return _weighted(eigvals_batch(A), e.lam, e.Lam)


def pucci_plus_batch(A: np.ndarray, e: EllipticityPair) -> np.ndarray:
    return _weighted(eigvals_batch(A), e.Lam, e.lam)


def pucci_minus(M: MatrixLike, e: EllipticityPair) -> float:
    """``lam * sum(positive eigenvalues) + Lam * sum(negative eigenvalues)``."""
    return float(pucci_minus_batch(_as_array(M), e))


def pucci_plus(M: MatrixLike, e: EllipticityPair) -> float:
    """``Lam * sum(positive eigenvalues) + lam * sum(negative eigenvalues)``."""
    return float(pucci_plus_batch(_as_array(M), e))


def random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def pucci_minus_oracle(M: MatrixLike, e: EllipticityPair, samples: int = 0,
                       rng: Optional[np.random.Generator] = None) -> float:
    """Brute-force ``inf tr(A M)`` over sampled ``lam I <= A <= Lam I``.

    The candidate set always contains the optimal ``A`` assembled in the
    eigenframe returned by ``numpy.linalg.eigh``, plus ``samples`` random
    matrices ``Q diag(d) Q^T`` with ``d`` uniform in ``[lam, Lam]``.
    """
    a = _as_array(M)
    n = a.shape[0]
    w, v = np.linalg.eigh(a)
    d = np.where(w > 0, e.lam, e.Lam)
    best = float(np.trace((v * d) @ v.T @ a))
    if samples:
        rng = rng if rng is not None else np.random.default_rng(0)
        for _ in range(samples):
            q = random_orthogonal(n, rng)
            dd = rng.uniform(e.lam, e.Lam, n)
            best = min(best, float(np.trace((q * dd) @ q.T @ a)))
    return best
