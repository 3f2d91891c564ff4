"""Small dense complex matrix arithmetic.

Everything here works on plain ``numpy`` arrays.  The central quantities are
the Gram product ``X @ X*``, its normalized elementary symmetric polynomials
(the symmetric means ``p_1 .. p_n`` of the Gram eigenvalues) and the shifted
determinant ``det(I + c X X*)`` expanded in those means:

    det(I + c X X*) = 1 + C(n,1) p_1 c + C(n,2) p_2 c^2 + ... + p_n c^n

The expansion has only nonnegative terms for ``c >= 0``, so it is evaluated
without cancellation.  Symmetric means come from principal-minor sums for
``n <= 4`` and from a Faddeev-LeVerrier trace recurrence above that; no
iterative eigensolver is involved, which keeps results deterministic.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

__all__ = [
    "as_complex_matrix",
    "gram",
    "gram_batch",
    "frobenius_norm_sq",
    "symmetric_means",
    "symmetric_means_from_gram",
    "symmetric_means_batch",
    "shifted_det",
    "shifted_det_from_means",
    "shifted_det_batch",
    "det_batch",
    "det_gram_batch",
]

# Negative round-off in a symmetric mean p_i is clamped to zero when its
# magnitude is below _CLAMP_REL * p_1**i; anything larger is a real bug.
_CLAMP_REL = 1e-12


def as_complex_matrix(entries, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Validate and return a finite 2-D complex128 matrix."""
    X = np.asarray(entries, dtype=np.complex128)
    if rows is not None:
        X = X.reshape(rows, cols)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"matrix must be at least 1x1, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("matrix entries must be finite")
    return X


def gram(X: np.ndarray) -> np.ndarray:
    """Return the Hermitian positive-semidefinite product ``X @ X*`` (n x n)."""
    G = X @ X.conj().T
    # Symmetrize so the stored triangles are exact conjugates of each other.
    return (G + G.conj().T) / 2.0


def gram_batch(Xb: np.ndarray) -> np.ndarray:
    """Batched ``gram`` for a stack of matrices with shape (B, n, T)."""
    G = np.einsum("bij,bkj->bik", Xb, Xb.conj())
    return (G + np.conj(np.swapaxes(G, 1, 2))) / 2.0


def frobenius_norm_sq(X: np.ndarray) -> float:
    return float(np.sum(np.abs(X) ** 2))


def _clamp_means(p: np.ndarray, p1_powers: np.ndarray) -> np.ndarray:
    """Zero out tiny negative round-off; reject structurally negative values."""
    thr = _CLAMP_REL * p1_powers
    bad = p < -thr
    if np.any(bad):
        raise ValueError("symmetric mean is negative beyond round-off; input is not PSD")
    return np.where(p < 0.0, 0.0, p)


def _esp_from_minors(G: np.ndarray) -> np.ndarray:
    """Elementary symmetric polynomials e_1..e_n of a Hermitian G via principal minors."""
    n = G.shape[0]
    e = np.empty(n)
    for size in range(1, n + 1):
        total = 0.0
        for subset in combinations(range(n), size):
            idx = np.asarray(subset)
            total += float(np.linalg.det(G[np.ix_(idx, idx)]).real)
        e[size - 1] = total
    return e


def _esp_leverrier(G: np.ndarray) -> np.ndarray:
    """Elementary symmetric polynomials via the Faddeev-LeVerrier recurrence.

    Used for n > 4 where the subset enumeration gets wasteful.  For the
    characteristic polynomial det(t I - G) = t^n - a_1 t^(n-1) - ... - a_n
    the recurrence gives a_k = tr(G M_k)/k with M_1 = I and
    M_{k+1} = G M_k - a_k I, and e_k = (-1)^(k+1) a_k.
    """
    n = G.shape[0]
    M = np.eye(n, dtype=G.dtype)
    e = np.empty(n)
    for k in range(1, n + 1):
        GM = G @ M
        a_k = float(np.trace(GM).real) / k
        e[k - 1] = a_k if k % 2 == 1 else -a_k
        M = GM - a_k * np.eye(n, dtype=G.dtype)
    return e


def symmetric_means_from_gram(G: np.ndarray) -> np.ndarray:
    """Symmetric means p_1..p_n of the eigenvalues of a Hermitian PSD matrix."""
    n = G.shape[0]
    e = _esp_from_minors(G) if n <= 4 else _esp_leverrier(G)
    binoms = np.array([math.comb(n, i) for i in range(1, n + 1)], dtype=float)
    p = e / binoms
    p1 = max(p[0], 0.0)
    powers = p1 ** np.arange(1, n + 1)
    return _clamp_means(p, powers)


def symmetric_means(X: np.ndarray) -> np.ndarray:
    """Symmetric means of the Gram eigenvalues of X.

    p_1 equals ||X||_F^2 / n and p_n equals det(X X*) / 1; the vector has
    length n = rows(X) and is nonnegative.
    """
    return symmetric_means_from_gram(gram(X))


def det_batch(Mb: np.ndarray) -> np.ndarray:
    """Determinants of a stack of square matrices, closed forms for n <= 3."""
    n = Mb.shape[-1]
    if n == 1:
        return Mb[:, 0, 0].copy()
    if n == 2:
        return Mb[:, 0, 0] * Mb[:, 1, 1] - Mb[:, 0, 1] * Mb[:, 1, 0]
    if n == 3:
        a, b, c = Mb[:, 0, 0], Mb[:, 0, 1], Mb[:, 0, 2]
        d, e, f = Mb[:, 1, 0], Mb[:, 1, 1], Mb[:, 1, 2]
        g, h, i = Mb[:, 2, 0], Mb[:, 2, 1], Mb[:, 2, 2]
        return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
    return np.linalg.det(Mb)


def det_gram_batch(Xb: np.ndarray) -> np.ndarray:
    """det(X X*) for a stack of matrices; real and clamped at zero."""
    d = det_batch(gram_batch(Xb))
    return np.maximum(np.real(d), 0.0)


def symmetric_means_batch(Xb: np.ndarray) -> np.ndarray:
    """Batched symmetric means, shape (B, n).  Supports n <= 4 vectorized."""
    n = Xb.shape[1]
    if n > 4:
        return np.stack([symmetric_means(X) for X in Xb])
    G = gram_batch(Xb)
    B = G.shape[0]
    p = np.empty((B, n))
    for size in range(1, n + 1):
        total = np.zeros(B)
        for subset in combinations(range(n), size):
            idx = np.asarray(subset)
            total += np.real(det_batch(G[:, idx[:, None], idx[None, :]]))
        p[:, size - 1] = total / math.comb(n, size)
    p1 = np.maximum(p[:, 0], 0.0)
    thr = _CLAMP_REL * p1[:, None] ** np.arange(1, n + 1)[None, :]
    if np.any(p < -thr):
        raise ValueError("symmetric mean is negative beyond round-off; input is not PSD")
    return np.where(p < 0.0, 0.0, p)


def shifted_det_from_means(p: np.ndarray, c: float) -> float:
    """Evaluate 1 + sum_i C(n,i) p_i c^i from a symmetric-mean vector."""
    if c < 0:
        raise ValueError("shift c must be nonnegative")
    n = len(p)
    value = 1.0
    cp = 1.0
    for i in range(1, n + 1):
        cp *= c
        value += math.comb(n, i) * p[i - 1] * cp
    return value


def shifted_det(X: np.ndarray, c: float) -> float:
    """det(I + c X X*) for c >= 0, evaluated through the symmetric means."""
    return shifted_det_from_means(symmetric_means(X), c)


def shifted_det_batch(Xb: np.ndarray, c: float) -> np.ndarray:
    """Batched ``shifted_det`` over a stack of matrices with shape (B, n, T)."""
    if c < 0:
        raise ValueError("shift c must be nonnegative")
    p = symmetric_means_batch(Xb)
    n = p.shape[1]
    value = np.ones(p.shape[0])
    cp = 1.0
    for i in range(1, n + 1):
        cp *= c
        value += math.comb(n, i) * p[:, i - 1] * cp
    return value
