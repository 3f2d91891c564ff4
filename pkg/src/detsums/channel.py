"""Rayleigh block-fading Monte Carlo layer.

The channel is Y = sqrt(rho/n_t) * H * (theta X) + N with i.i.d. unit-variance
circular complex Gaussian H and N.  Codes are spherical sections of a lattice,
normalized so the average transmit energy is one per channel use
(E ||theta X||_F^2 = T).

Decoders:

* ``ml-exhaustive``  exact minimum-distance search over the finite code;
* ``naive-lattice``  closest point of the whole (infinite) lattice under the
  channel metric, found by sphere decoding seeded at the Babai point.

Randomness is counter-based: each (snr index, trial) pair owns a Philox
stream derived from the seed, so results are bit-identical regardless of how
trials are batched or parallelized.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import (CodeTooLarge, DimensionMismatch, InsufficientStatistics,
                     RadiusOverflow)
from .lattice import (DEFAULT_BUDGET, MatrixLattice, coefficient_blocks,
                      realize_block)
from .sums import shifted_det_sum

__all__ = [
    "ChannelConfig",
    "FiniteCode",
    "SimResult",
    "coding_scheme",
    "fixed_code",
    "normalize_energy",
    "union_bound",
    "simulate",
    "sphere_cvp",
    "naive_lattice_decode",
    "diversity_slope",
    "wilson_halfwidth",
]

_Z95 = 1.959963984540054  # two-sided 95% normal quantile

DECODERS = ("ml-exhaustive", "naive-lattice")


@dataclass(frozen=True)
class ChannelConfig:
    n_t: int
    n_r: int
    T: int
    snr_grid_db: tuple
    trials_per_point: int
    seed: int
    decoder: str = "ml-exhaustive"
    multiplexing_r: float | None = None
    fixed_radius: float | None = None
    ml_code_cap: int = 4096
    noise_scale: float = 1.0          # 0 gives the noiseless harness variant
    chernoff_scaling: bool = True     # keep the 1/(4 n_t) factor in the bound shift
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.decoder not in DECODERS:
            raise ValueError(f"decoder must be one of {DECODERS}")
        grid = tuple(float(v) for v in self.snr_grid_db)
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("snr_grid_db must be strictly increasing")
        object.__setattr__(self, "snr_grid_db", grid)
        if (self.multiplexing_r is None) == (self.fixed_radius is None):
            raise ValueError("set exactly one of multiplexing_r and fixed_radius")

    def to_dict(self) -> dict:
        return {"n_t": self.n_t, "n_r": self.n_r, "T": self.T,
                "snrGridDb": list(self.snr_grid_db),
                "trialsPerPoint": self.trials_per_point, "seed": self.seed,
                "decoder": self.decoder, "multiplexingR": self.multiplexing_r,
                "fixedRadius": self.fixed_radius, "mlCodeCap": self.ml_code_cap,
                "noiseScale": self.noise_scale,
                "chernoffScaling": self.chernoff_scaling}

    @classmethod
    def from_dict(cls, doc: dict) -> "ChannelConfig":
        return cls(n_t=doc["n_t"], n_r=doc["n_r"], T=doc["T"],
                   snr_grid_db=tuple(doc["snrGridDb"]),
                   trials_per_point=doc["trialsPerPoint"], seed=doc["seed"],
                   decoder=doc.get("decoder", "ml-exhaustive"),
                   multiplexing_r=doc.get("multiplexingR"),
                   fixed_radius=doc.get("fixedRadius"),
                   ml_code_cap=doc.get("mlCodeCap", 4096),
                   noise_scale=doc.get("noiseScale", 1.0),
                   chernoff_scaling=doc.get("chernoffScaling", True))


@dataclass(frozen=True)
class FiniteCode:
    """Spherical section of a lattice, optionally rescaled."""

    lattice: MatrixLattice
    radius: float           # enumeration radius inside the raw lattice
    scale: float            # codewords are scale * X for X in L(radius)
    coeffs: np.ndarray      # (N, k) int64, lexicographically sorted
    matrices: np.ndarray    # (N, n, T), scale applied

    def __post_init__(self):
        self.coeffs.setflags(write=False)
        self.matrices.setflags(write=False)

    @property
    def size(self) -> int:
        return self.coeffs.shape[0]


def _collect_code(lat: MatrixLattice, radius: float, scale: float,
                  budget: int) -> FiniteCode:
    blocks = [c for c, _ in coefficient_blocks(lat, radius, budget=budget)]
    coeffs = np.concatenate(blocks) if blocks else np.zeros((0, lat.k), dtype=np.int64)
    order = np.lexsort(coeffs.T[::-1])
    coeffs = coeffs[order]
    return FiniteCode(lattice=lat, radius=radius, scale=scale, coeffs=coeffs,
                      matrices=scale * realize_block(lat, coeffs))


def coding_scheme(lat: MatrixLattice, r: float, rho: float, *,
                  budget: int = DEFAULT_BUDGET) -> FiniteCode:
    """Finite code at multiplexing gain r and SNR rho.

    The enumeration radius is rho^(rT/k) and every codeword is scaled down by
    the same factor, so the code size grows like rho^(rT) while the codebook
    stays inside a fixed ball.
    """
    if rho < 1.0:
        raise ValueError("rho must be >= 1 for the scheme mode")
    if r < 0:
        raise ValueError("multiplexing gain must be nonnegative")
    radius = rho ** (r * lat.T / lat.k)
    return _collect_code(lat, radius, 1.0 / radius, budget)


def fixed_code(lat: MatrixLattice, radius: float, *,
               budget: int = DEFAULT_BUDGET) -> FiniteCode:
    """Finite code L(radius) with no rescaling."""
    return _collect_code(lat, radius, 1.0, budget)


def normalize_energy(matrices: np.ndarray, T: int) -> float:
    """Scale theta making the mean per-channel-use energy one:
    theta^2 = T * N / sum ||W||_F^2."""
    if matrices.shape[0] == 0:
        raise ValueError("code must be nonempty")
    total = float(np.sum(np.abs(matrices) ** 2))
    if total <= 0:
        raise ValueError("code has zero energy")
    return math.sqrt(T * matrices.shape[0] / total)


def union_bound(code: FiniteCode, n_r: int, rho: float, *,
                chernoff_scaling: bool = True,
                budget: int = DEFAULT_BUDGET) -> float:
    """Pairwise-error union bound for the code at SNR rho.

    Sums det(I + c D D*)^-n_r over all nonzero lattice points D of Frobenius
    norm at most twice the code radius (codeword differences live there).
    With ``chernoff_scaling`` the shift is c = rho theta_eff^2 / (4 n_t),
    which makes the value a true upper bound on block error probability for
    the simulated channel; without it the conventional c = rho theta_eff^2
    is used, which only preserves the decay exponents.
    """
    theta = normalize_energy(code.matrices, code.lattice.T)
    amp_sq = rho * (theta * code.scale) ** 2
    if chernoff_scaling:
        amp_sq /= 4.0 * code.lattice.n
    return shifted_det_sum(code.lattice, n_r, amp_sq, 2.0 * code.radius,
                           budget=budget)


@dataclass(frozen=True)
class SimResult:
    snr_db: tuple
    error_rate: tuple
    error_count: tuple
    trials: tuple
    wilson_halfwidth: tuple
    code_size: int
    theta: float
    decoder: str
    seed: int
    overflow_count: tuple = ()

    def to_csv(self, path=None) -> str | None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["snr_db", "error_rate", "errors", "trials", "ci_halfwidth"])
        for row in zip(self.snr_db, self.error_rate, self.error_count,
                       self.trials, self.wilson_halfwidth):
            w.writerow([repr(float(row[0])), repr(float(row[1])), int(row[2]),
                        int(row[3]), repr(float(row[4]))])
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        return None

    def to_json_dict(self) -> dict:
        return {
            "snrDb": list(self.snr_db),
            "errorRate": list(self.error_rate),
            "errorCount": list(self.error_count),
            "trials": list(self.trials),
            "wilsonHalfwidth": list(self.wilson_halfwidth),
            "codeSize": self.code_size,
            "theta": self.theta,
            "decoder": self.decoder,
            "seed": self.seed,
            "overflowCount": list(self.overflow_count),
        }


def wilson_halfwidth(errors: int, trials: int, z: float = _Z95) -> float:
    """Halfwidth of the Wilson score interval; positive even at zero errors."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = errors / trials
    return (z / (1.0 + z * z / trials)) * math.sqrt(
        p * (1.0 - p) / trials + z * z / (4.0 * trials * trials))


def _trial_rng(seed: int, snr_index: int, trial: int) -> np.random.Generator:
    # Putting the indices in high counter words keeps per-trial streams
    # disjoint no matter how many draws one trial consumes.
    key = seed & ((1 << 128) - 1)
    bg = np.random.Philox(counter=[0, trial, snr_index, 0], key=key)
    return np.random.Generator(bg)


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / math.sqrt(2.0)


def simulate(lat: MatrixLattice, cfg: ChannelConfig) -> SimResult:
    """Estimate block error rate on each SNR point; deterministic given seed."""
    if cfg.n_t != lat.n or cfg.T != lat.T:
        raise DimensionMismatch(
            f"config (n_t={cfg.n_t}, T={cfg.T}) does not match lattice "
            f"(n={lat.n}, T={lat.T})")
    fixed = None
    if cfg.fixed_radius is not None:
        fixed = fixed_code(lat, cfg.fixed_radius, budget=cfg.budget)
    rates, counts, trials_out, halfwidths, overflows = [], [], [], [], []
    theta_last = math.nan
    size_last = 0
    for snr_index, snr_db in enumerate(cfg.snr_grid_db):
        rho = 10.0 ** (snr_db / 10.0)
        code = fixed if fixed is not None else coding_scheme(
            lat, cfg.multiplexing_r, rho, budget=cfg.budget)
        if code.size == 0:
            raise ValueError("finite code is empty at this SNR")
        if cfg.decoder == "ml-exhaustive" and code.size > cfg.ml_code_cap:
            raise CodeTooLarge(
                f"code size {code.size} exceeds ml-exhaustive cap {cfg.ml_code_cap}")
        theta = normalize_energy(code.matrices, lat.T)
        amp = math.sqrt(rho / lat.n) * theta
        candidates = amp * code.matrices          # (N, n, T), pre-amplified
        gen_flat = (amp * code.scale) * lat.basis.reshape(lat.k, -1)
        errors = 0
        overflow = 0
        for trial in range(cfg.trials_per_point):
            rng = _trial_rng(cfg.seed, snr_index, trial)
            j = int(rng.integers(code.size))
            H = _complex_gaussian(rng, (cfg.n_r, lat.n))
            noise = cfg.noise_scale * _complex_gaussian(rng, (cfg.n_r, lat.T))
            y = H @ candidates[j] + noise
            if cfg.decoder == "ml-exhaustive":
                diff = y[None, :, :] - np.einsum("ri,nit->nrt", H, candidates)
                metrics = np.sum(np.abs(diff) ** 2, axis=(1, 2))
                decoded_ok = int(np.argmin(metrics)) == j
            else:
                A = _real_generator(H, gen_flat, lat.n, lat.T, cfg.n_r)
                target = _vec_real(y)
                try:
                    z_hat = sphere_cvp(A, target)
                    decoded_ok = np.array_equal(z_hat, code.coeffs[j])
                except RadiusOverflow:
                    overflow += 1
                    decoded_ok = False
            if not decoded_ok:
                errors += 1
        n = cfg.trials_per_point
        rates.append(errors / n)
        counts.append(errors)
        trials_out.append(n)
        halfwidths.append(wilson_halfwidth(errors, n))
        overflows.append(overflow)
        theta_last = theta
        size_last = code.size
    return SimResult(snr_db=tuple(cfg.snr_grid_db), error_rate=tuple(rates),
                     error_count=tuple(counts), trials=tuple(trials_out),
                     wilson_halfwidth=tuple(halfwidths), code_size=size_last,
                     theta=theta_last, decoder=cfg.decoder, seed=cfg.seed,
                     overflow_count=tuple(overflows))


def _vec_real(Y: np.ndarray) -> np.ndarray:
    flat = Y.reshape(-1)
    out = np.empty(2 * flat.size)
    out[0::2] = flat.real
    out[1::2] = flat.imag
    return out


def _real_generator(H: np.ndarray, gen_flat: np.ndarray, n: int, T: int,
                    n_r: int) -> np.ndarray:
    """Columns are the real vectorizations of amp * H * B_i."""
    k = gen_flat.shape[0]
    imgs = (H @ gen_flat.reshape(k, n, T)).reshape(k, -1)   # (k, n_r*T) complex
    A = np.empty((2 * imgs.shape[1], k))
    A[0::2, :] = imgs.real.T
    A[1::2, :] = imgs.imag.T
    return A


def sphere_cvp(A: np.ndarray, y: np.ndarray, *, node_budget: int = 2_000_000) -> np.ndarray:
    """Closest lattice point min_z ||A z - y|| over integer z, exact.

    Schnorr-Euchner depth-first search seeded at the Babai point, whose
    distance is a valid initial radius, so the search always terminates with
    the true minimizer.  RadiusOverflow marks an exhausted node budget.
    """
    d, k = A.shape
    if d < k:
        raise ValueError("target dimension must be at least the lattice rank")
    Q, R = np.linalg.qr(A)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    R = R * signs[:, None]
    Q = Q * signs[None, :]
    if np.min(np.abs(np.diag(R))) <= 0:
        raise ValueError("generator matrix is rank deficient")
    yp = Q.T @ y

    z_babai = np.zeros(k, dtype=np.int64)
    for i in range(k - 1, -1, -1):
        t = yp[i] - R[i, i + 1:] @ z_babai[i + 1:]
        z_babai[i] = round(t / R[i, i])
    resid = R @ z_babai - yp
    best_dist = float(resid @ resid)
    best_z = z_babai.copy()
    radius = best_dist * (1.0 + 1e-9) + 1e-12 * (1.0 + float(yp @ yp))

    z = np.zeros(k, dtype=np.int64)
    nodes = 0

    def search(level: int, acc: np.ndarray, partial: float) -> None:
        nonlocal nodes, best_dist, best_z, radius
        t = yp[level] - acc[level]
        dcoef = R[level, level]
        center = t / dcoef
        zi = round(center)
        step = 1 if center - zi >= 0 else -1
        while True:
            nodes += 1
            if nodes > node_budget:
                raise RadiusOverflow(f"sphere search exceeded {node_budget} nodes")
            seg = t - dcoef * zi
            cand = partial + seg * seg
            if cand > radius:
                break
            z[level] = zi
            if level == 0:
                if cand < best_dist:
                    best_dist = cand
                    best_z = z.copy()
                    radius = cand * (1.0 + 1e-9) + 1e-12 * (1.0 + float(yp @ yp))
            else:
                search(level - 1, acc + R[:, level] * zi, cand)
            zi = zi + step
            step = -step - (1 if step > 0 else -1)

    search(k - 1, np.zeros(k), 0.0)
    return best_z


def naive_lattice_decode(lat: MatrixLattice, H: np.ndarray, y: np.ndarray,
                         amp: float, *, node_budget: int = 2_000_000) -> np.ndarray:
    """Coefficients of the infinite-lattice point closest to y under the
    channel map X -> amp * H * X."""
    gen_flat = amp * lat.basis.reshape(lat.k, -1)
    A = _real_generator(H, gen_flat, lat.n, lat.T, H.shape[0])
    return sphere_cvp(A, _vec_real(y), node_budget=node_budget)


def diversity_slope(result: SimResult, window: int = 3,
                    min_errors: int = 20) -> float:
    """High-SNR slope of -log10(error rate) against log10(rho).

    Fitted over the ``window`` highest-SNR points that carry at least
    ``min_errors`` error events; points below that statistical floor say
    nothing about the slope.  InsufficientStatistics if fewer qualify.
    """
    qualified = [idx for idx in range(len(result.snr_db))
                 if result.error_count[idx] >= min_errors
                 and result.error_rate[idx] > 0]
    if len(qualified) < window:
        raise InsufficientStatistics(
            f"need {window} SNR points with >= {min_errors} errors, "
            f"have {len(qualified)}")
    take = qualified[-window:]
    x = np.array([result.snr_db[idx] / 10.0 for idx in take])   # log10 rho
    yv = np.array([-math.log10(result.error_rate[idx]) for idx in take])
    design = np.column_stack([np.ones(x.size), x])
    coef, _, _, _ = np.linalg.lstsq(design, yv, rcond=None)
    return float(coef[1])
