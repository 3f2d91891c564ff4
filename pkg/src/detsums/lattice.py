"""Matrix lattices and sphere enumeration.

A rank-k lattice in n x T complex matrices is handled through the real
vectorization of its basis: each basis matrix maps to R^(2nT) by interleaving
real and imaginary parts, so the Frobenius norm becomes the Euclidean norm
and point enumeration reduces to a classic depth-first sphere walk over the
Cholesky factor of the k x k real Gram matrix.

The walker is organized around blocks: instead of yielding points one by one
it expands whole frontiers of partial coefficient vectors with vectorized
interval arithmetic, emitting ``(coeffs, norm_sq)`` arrays.  That keeps the
per-point cost at a handful of numpy flops, which matters for rank-8 balls
holding 10^7..10^8 points.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import BudgetExceeded, DependentBasis, DimensionMismatch
from .linalg import as_complex_matrix

__all__ = [
    "MatrixLattice",
    "LatticePoint",
    "build_lattice",
    "rescale_lattice",
    "size_reduce",
    "lattice_from_json",
    "lattice_to_json",
    "coefficient_blocks",
    "enumerate_points",
    "realize_block",
    "shell_counts",
    "predicted_point_count",
    "top_level_range",
    "DEFAULT_BUDGET",
]

DEFAULT_BUDGET = 2 ** 31

# Relative slack on the squared radius so that shells sitting exactly on the
# boundary (norm^2 an integer, radius sqrt of an integer) are always included.
_RADIUS_TOL = 1e-9

# Internal budget for the shortest-vector search at build time.
_MIN_NORM_BUDGET = 10 ** 7


@dataclass(frozen=True)
class MatrixLattice:
    """Immutable rank-k lattice of n x T complex matrices."""

    n: int
    T: int
    k: int
    basis: np.ndarray       # (k, n, T) complex128
    gram_real: np.ndarray   # (k, k) float64, Re tr(B_i B_j*)
    min_norm_sq: float
    chol_upper: np.ndarray  # upper triangular U with U.T @ U = gram_real

    def __post_init__(self):
        for arr in (self.basis, self.gram_real, self.chol_upper):
            arr.setflags(write=False)

    @property
    def covolume(self) -> float:
        return float(np.prod(np.diag(self.chol_upper)))

    def realize(self, coeffs: Sequence[int]) -> np.ndarray:
        z = np.asarray(coeffs, dtype=float)
        return np.tensordot(z, self.basis, axes=(0, 0))


@dataclass
class LatticePoint:
    coeffs: np.ndarray
    matrix: np.ndarray
    norm_f: float
    sym: np.ndarray | None = field(default=None, compare=False)


def _vectorize_real(basis: np.ndarray) -> np.ndarray:
    k = basis.shape[0]
    flat = basis.reshape(k, -1)
    V = np.empty((k, 2 * flat.shape[1]))
    V[:, 0::2] = flat.real
    V[:, 1::2] = flat.imag
    return V


def build_lattice(basis: Sequence[np.ndarray]) -> MatrixLattice:
    """Validate a basis and assemble the lattice with its cached geometry.

    Raises DimensionMismatch for inconsistent shapes and DependentBasis when
    the real Gram matrix is numerically singular (condition above 1e12).
    """
    if len(basis) == 0:
        raise DimensionMismatch("basis must be nonempty")
    mats = [as_complex_matrix(B) for B in basis]
    n, T = mats[0].shape
    for B in mats:
        if B.shape != (n, T):
            raise DimensionMismatch(f"basis shapes differ: {B.shape} vs {(n, T)}")
    stack = np.stack(mats)
    k = len(mats)
    V = _vectorize_real(stack)
    G = V @ V.T
    G = (G + G.T) / 2.0
    eigs = np.linalg.eigvalsh(G)
    if eigs[0] <= 0 or eigs[0] < 1e-12 * eigs[-1]:
        raise DependentBasis(
            f"basis is numerically dependent over R (eig ratio {eigs[0]:.3e}/{eigs[-1]:.3e})"
        )
    U = np.linalg.cholesky(G).T
    min_norm_sq = _shortest_nonzero_norm_sq(G, U)
    return MatrixLattice(n=n, T=T, k=k, basis=stack, gram_real=G,
                         min_norm_sq=min_norm_sq, chol_upper=U)


def rescale_lattice(lat: MatrixLattice, factor: float) -> MatrixLattice:
    """Lattice with every basis matrix multiplied by ``factor``."""
    if factor <= 0:
        raise ValueError("scale factor must be positive")
    return build_lattice(list(lat.basis * factor))


def size_reduce(lat: MatrixLattice, max_passes: int = 32) -> MatrixLattice:
    """Same lattice on a size-reduced basis.

    Pairwise sweeps subtract rounded Gram projections, shortening skewed
    bases before enumeration.  Desk-scale ranks rarely need it (the built-in
    constructions are already near-orthogonal), so it is opt-in rather than
    part of build_lattice.
    """
    basis = [B.copy() for B in lat.basis]
    V = _vectorize_real(np.stack(basis))
    G = V @ V.T
    for _ in range(max_passes):
        changed = False
        for i in range(lat.k):
            for j in range(lat.k):
                if i == j:
                    continue
                q = round(G[i, j] / G[j, j])
                if q != 0:
                    basis[i] = basis[i] - q * basis[j]
                    G[i, :] -= q * G[j, :]
                    G[:, i] -= q * G[:, j]
                    changed = True
        if not changed:
            break
    return build_lattice(basis)


def _shortest_nonzero_norm_sq(G: np.ndarray, U: np.ndarray) -> float:
    # The shortest basis vector bounds the minimum, so a single walk at that
    # radius is guaranteed to see a shortest vector.
    radius = math.sqrt(float(np.min(np.diag(G))))
    best = float(np.min(np.diag(G)))
    for ztail, norm_sq in _walk(U, radius * radius * (1.0 + _RADIUS_TOL),
                                budget=_MIN_NORM_BUDGET, max_rows=1 << 16):
        nonzero = np.any(ztail != 0, axis=1)
        if np.any(nonzero):
            best = min(best, float(norm_sq[nonzero].min()))
    if best <= 0:
        raise DependentBasis("lattice has a numerically zero nonzero vector")
    return best


# ---------------------------------------------------------------------------
# Sphere enumeration
# ---------------------------------------------------------------------------

def _ball_volume(k: int, radius: float) -> float:
    return math.pi ** (k / 2.0) / math.gamma(k / 2.0 + 1.0) * radius ** k


def predicted_point_count(lat: MatrixLattice, radius: float) -> float:
    """Volume heuristic for |L(radius)|, padded for surface effects."""
    vol = _ball_volume(lat.k, radius) / lat.covolume
    return 1.5 * vol + 1024.0


def top_level_range(lat: MatrixLattice, radius: float) -> tuple[int, int]:
    """Inclusive range of the last coefficient inside the ball; the natural
    axis along which partitioned enumeration splits."""
    d = lat.chol_upper[lat.k - 1, lat.k - 1]
    half = radius * math.sqrt(1.0 + _RADIUS_TOL) / d
    return (-int(math.floor(half + 1e-12)), int(math.floor(half + 1e-12)))


def _ragged_expand(counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row indices and within-row offsets for expanding per-row ranges."""
    total = int(counts.sum())
    rows = np.repeat(np.arange(counts.size), counts)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    offsets = np.arange(total) - np.repeat(starts, counts)
    return rows, offsets


def _walk(U: np.ndarray, rad_sq: float, *, budget: int, max_rows: int,
          top_range: tuple[int, int] | None = None) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Depth-first block enumeration of all z with z^T G z <= rad_sq.

    Yields (ztail, norm_sq) where ztail holds the coefficients in reverse
    index order (column 0 is index k-1).  The zero vector is included; callers
    filter it.  Raises BudgetExceeded when the emitted count passes ``budget``.
    """
    k = U.shape[0]
    emitted = 0

    def expand(level: int, ztail: np.ndarray, y: np.ndarray, used: np.ndarray):
        nonlocal emitted
        d = U[level, level]
        rem = rad_sq - used
        rem = np.maximum(rem, 0.0)
        half = np.sqrt(rem) / d
        center = -y[:, level] / d
        low = np.ceil(center - half - 1e-12)
        high = np.floor(center + half + 1e-12)
        if level == k - 1 and top_range is not None:
            low = np.maximum(low, float(top_range[0]))
            high = np.minimum(high, float(top_range[1]))
        counts = np.maximum(high - low + 1.0, 0.0).astype(np.int64)
        if counts.sum() == 0:
            return
        rows, offs = _ragged_expand(counts)
        zvals = low[rows] + offs
        seg = d * zvals + y[rows, level]
        new_used = used[rows] + seg * seg
        keep = new_used <= rad_sq
        rows = rows[keep]
        zvals = zvals[keep].astype(np.int64)
        new_used = new_used[keep]
        if rows.size == 0:
            return
        new_ztail = np.concatenate([ztail[rows], zvals[:, None]], axis=1)
        if level == 0:
            emitted += new_ztail.shape[0]
            if emitted > budget:
                raise BudgetExceeded(
                    f"enumeration emitted more than budget={budget} points")
            yield new_ztail, new_used
            return
        new_y = y[rows, :level] + U[:level, level][None, :] * zvals[:, None]
        n_new = new_ztail.shape[0]
        if n_new <= max_rows:
            yield from expand(level - 1, new_ztail, new_y, new_used)
        else:
            for s in range(0, n_new, max_rows):
                e = s + max_rows
                yield from expand(level - 1, new_ztail[s:e], new_y[s:e], new_used[s:e])

    z0 = np.empty((1, 0), dtype=np.int64)
    y0 = np.zeros((1, k))
    used0 = np.zeros(1)
    yield from expand(k - 1, z0, y0, used0)


def _leaf_filter(ztail: np.ndarray, norm_sq: np.ndarray, dedup_signs: bool):
    nonzero = np.any(ztail != 0, axis=1)
    if dedup_signs:
        # Column 0 stores the highest coefficient index, so the first nonzero
        # column in storage order is the leading coefficient; keep it positive.
        nz = ztail != 0
        lead_col = nz.argmax(axis=1)
        lead = ztail[np.arange(ztail.shape[0]), lead_col]
        nonzero &= lead > 0
    return ztail[nonzero], norm_sq[nonzero]


def coefficient_blocks(lat: MatrixLattice, radius: float, *,
                       dedup_signs: bool = False,
                       budget: int = DEFAULT_BUDGET,
                       max_rows: int = 1 << 18,
                       top_range: tuple[int, int] | None = None,
                       skip_budget_check: bool = False,
                       ) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield (coeffs, norm_sq) blocks covering every nonzero point of L(radius).

    Coefficient rows are in natural index order.  With ``dedup_signs`` exactly
    one of each +/-z pair is produced (leading coefficient positive).
    ``top_range`` restricts the last coefficient to a subrange, which is how
    partitioned enumeration splits work across workers.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if not skip_budget_check and predicted_point_count(lat, radius) > budget:
        raise BudgetExceeded(
            f"predicted point count {predicted_point_count(lat, radius):.3e} "
            f"exceeds budget {budget}")
    rad_sq = radius * radius * (1.0 + _RADIUS_TOL)
    for ztail, norm_sq in _walk(lat.chol_upper, rad_sq, budget=budget,
                                max_rows=max_rows, top_range=top_range):
        ztail, norm_sq = _leaf_filter(ztail, norm_sq, dedup_signs)
        if ztail.shape[0]:
            yield ztail[:, ::-1], norm_sq


def realize_block(lat: MatrixLattice, coeffs: np.ndarray) -> np.ndarray:
    """Realize a (B, k) coefficient block as a (B, n, T) matrix stack."""
    flat = coeffs.astype(float) @ lat.basis.reshape(lat.k, -1)
    return flat.reshape(-1, lat.n, lat.T)


def enumerate_points(lat: MatrixLattice, radius: float, *,
                     dedup_signs: bool = False,
                     budget: int = DEFAULT_BUDGET) -> Iterator[LatticePoint]:
    """Per-point stream over L(radius); convenience wrapper for small balls."""
    for coeffs, norm_sq in coefficient_blocks(lat, radius, dedup_signs=dedup_signs,
                                              budget=budget):
        mats = realize_block(lat, coeffs)
        for row in range(coeffs.shape[0]):
            yield LatticePoint(coeffs=coeffs[row].copy(), matrix=mats[row],
                               norm_f=math.sqrt(float(norm_sq[row])))


def shell_counts(lat: MatrixLattice, radii: Sequence[float], *,
                 budget: int = DEFAULT_BUDGET) -> list[int]:
    """|L(M)| for each radius M in an increasing list, from one enumeration."""
    radii = list(radii)
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly increasing")
    if radii[0] <= 0:
        raise ValueError("radii must be positive")
    bounds = np.array([r * r * (1.0 + _RADIUS_TOL) for r in radii])
    counts = np.zeros(len(radii), dtype=np.int64)
    for _, norm_sq in coefficient_blocks(lat, radii[-1], budget=budget):
        for j, b in enumerate(bounds):
            counts[j] += int(np.count_nonzero(norm_sq <= b))
    return [int(c) for c in counts]


# ---------------------------------------------------------------------------
# JSON basis format: {"n": int, "T": int, "basis": [[[re, im], ...], ...]}
# with one flat row-major entry list per basis matrix.
# ---------------------------------------------------------------------------

def lattice_from_json(source) -> MatrixLattice:
    """Load a lattice basis from a JSON file path, file object, or dict."""
    if isinstance(source, dict):
        doc = source
    elif hasattr(source, "read"):
        doc = json.load(source)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    n, T = int(doc["n"]), int(doc["T"])
    basis = []
    for flat in doc["basis"]:
        if len(flat) != n * T:
            raise DimensionMismatch(
                f"basis entry list has {len(flat)} entries, expected {n * T}")
        vals = np.array([complex(re, im) for re, im in flat])
        basis.append(vals.reshape(n, T))
    return build_lattice(basis)


def lattice_to_json(lat: MatrixLattice) -> dict:
    return {
        "n": lat.n,
        "T": lat.T,
        "basis": [
            [[float(v.real), float(v.imag)] for v in B.reshape(-1)]
            for B in lat.basis
        ],
    }
