"""Monte Carlo sampling of Gaussian (or random sign) matrix products.

Random numbers come from Philox4x32-10 keyed by the 64-bit seed; the
counter encodes (block, sample index, retry) so every sample owns an
independent substream and results do not depend on how samples are split
across workers.  Normals use Box-Muller on pairs of 32-bit words.

Eigenvalues are classified by the diagonal blocks of the real Schur form
computed by LAPACK ``dgeev``: a 1x1 block yields an eigenvalue with
imaginary part exactly 0.0, a 2x2 block a conjugate pair with nonzero
imaginary part.  No tolerance is involved.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from scipy import stats

from .kernels import DensityGrid
from .weights import ProductSpec

__all__ = [
    "philox4x32",
    "McConfig",
    "SpectrumSample",
    "EmpiricalDistribution",
    "factor_shapes",
    "sample_factors",
    "sample_spectrum",
    "sample_batch",
    "estimate_distribution",
    "histogram_real_global",
    "global_law_bin_average",
    "l1_distance",
    "wilson_interval",
]

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK = np.uint64(0xFFFFFFFF)
_SHIFT = np.uint64(32)
# tr P^2 and entries beyond this are treated as a numerical blow-up
_MAX_NORM = 1e150
_Z_997 = float(stats.norm.ppf(1 - 0.003 / 2))


def philox4x32(counter: np.ndarray, key, rounds: int = 10) -> np.ndarray:
    """Philox4x32 bijection applied to each row of ``counter`` (shape (..., 4))."""
    c = np.asarray(counter, dtype=np.uint32)
    c0, c1, c2, c3 = (c[..., i].astype(np.uint64) for i in range(4))
    k0, k1 = int(key[0]) & 0xFFFFFFFF, int(key[1]) & 0xFFFFFFFF
    for r in range(rounds):
        if r:
            k0 = (k0 + _W0) & 0xFFFFFFFF
            k1 = (k1 + _W1) & 0xFFFFFFFF
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = ((p1 >> _SHIFT) ^ c1 ^ np.uint64(k0), p1 & _MASK,
                          (p0 >> _SHIFT) ^ c3 ^ np.uint64(k1), p0 & _MASK)
    return np.stack([c0, c1, c2, c3], axis=-1).astype(np.uint32)


@dataclass(frozen=True)
class McConfig:
    spec: ProductSpec
    samples: int
    seed: int
    workers: int = 1
    entry_law: Literal["gaussian", "rademacher"] = "gaussian"
    chunk: int = 4096

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.entry_law not in ("gaussian", "rademacher"):
            raise ValueError(f"unknown entry law {self.entry_law!r}")


@dataclass
class SpectrumSample:
    reals: list[float]
    complex_pairs: list[tuple[float, float]]
    trace_sq: float

    @property
    def N(self) -> int:
        return len(self.reals) + 2 * len(self.complex_pairs)


def factor_shapes(spec: ProductSpec) -> list[tuple[int, int]]:
    """Shapes (N+nu_{i-1}) x (N+nu_i) of the m factors."""
    return [(spec.N + spec.nu[i], spec.N + spec.nu[i + 1]) for i in range(spec.m)]


def _words(seed: int, indices: np.ndarray, count: int, retry: int) -> np.ndarray:
    # (len(indices), 4 * ceil(count / 4)) uint32 words for each sample index
    blocks = -(-count // 4)
    idx = np.asarray(indices, dtype=np.uint64)
    ctr = np.empty((idx.size, blocks, 4), dtype=np.uint32)
    ctr[..., 0] = np.arange(blocks, dtype=np.uint32)[None, :]
    ctr[..., 1] = (idx & _MASK).astype(np.uint32)[:, None]
    ctr[..., 2] = (idx >> _SHIFT).astype(np.uint32)[:, None]
    ctr[..., 3] = retry
    key = (seed & 0xFFFFFFFF, seed >> 32)
    return philox4x32(ctr, key).reshape(idx.size, blocks * 4)


def _normals(words: np.ndarray) -> np.ndarray:
    u = (words.astype(np.float64) + 0.5) * 2.0**-32
    u1, u2 = u[:, 0::2], u[:, 1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    out = np.empty_like(u)
    out[:, 0::2] = r * np.cos(2.0 * np.pi * u2)
    out[:, 1::2] = r * np.sin(2.0 * np.pi * u2)
    return out


def _signs(words: np.ndarray, count: int) -> np.ndarray:
    bits = np.unpackbits(words.astype("<u4").view(np.uint8), axis=1, bitorder="little")
    return 2.0 * bits[:, :count] - 1.0


def sample_factors(cfg: McConfig, indices, retry: int = 0) -> list[np.ndarray]:
    """Factor matrices for each sample index, stacked as (len(indices), rows, cols)."""
    shapes = factor_shapes(cfg.spec)
    total = sum(r * c for r, c in shapes)
    indices = np.atleast_1d(np.asarray(indices, dtype=np.uint64))
    if cfg.entry_law == "gaussian":
        vals = _normals(_words(cfg.seed, indices, total, retry))[:, :total]
    else:
        vals = _signs(_words(cfg.seed, indices, -(-total // 32), retry), total)
    out, pos = [], 0
    for r, c in shapes:
        out.append(vals[:, pos:pos + r * c].reshape(-1, r, c))
        pos += r * c
    return out


def _products(cfg: McConfig, indices, retry: int = 0) -> np.ndarray:
    factors = sample_factors(cfg, indices, retry)
    prod = factors[0]
    for f in factors[1:]:
        prod = prod @ f
    if not np.all(np.isfinite(prod)) or np.max(np.abs(prod), initial=0.0) > _MAX_NORM:
        raise OverflowError("matrix product exceeded the max-norm guard")
    return prod


@dataclass
class _Batch:
    real_counts: np.ndarray
    trace_sq: np.ndarray
    eigenvalues: np.ndarray
    retries: int


def _eigvals_with_retry(cfg: McConfig, indices: np.ndarray) -> _Batch:
    prods = _products(cfg, indices)
    retries = 0
    try:
        ev = np.linalg.eigvals(prods)
    except np.linalg.LinAlgError:
        ev = np.empty(prods.shape[:2], dtype=complex)
        for n, idx in enumerate(indices):
            attempt, p = 0, prods[n]
            while True:
                try:
                    ev[n] = np.linalg.eigvals(p)
                    break
                except np.linalg.LinAlgError:
                    attempt += 1
                    retries += 1
                    if attempt > 16:
                        raise
                    p = _products(cfg, [idx], attempt)[0]
                    prods[n] = p
    ev = np.asarray(ev, dtype=complex)
    real_counts = np.count_nonzero(ev.imag == 0.0, axis=1)
    trace_sq = np.einsum("bij,bji->b", prods, prods)
    return _Batch(real_counts, trace_sq, ev, retries)


def _to_sample(ev: np.ndarray, trace_sq: float) -> SpectrumSample:
    reals = sorted(float(z.real) for z in ev if z.imag == 0.0)
    pairs = sorted((float(z.real), float(z.imag)) for z in ev if z.imag > 0.0)
    return SpectrumSample(reals, pairs, float(trace_sq))


def sample_spectrum(cfg: McConfig, index: int) -> SpectrumSample:
    """Spectrum of sample ``index``; identical to the same index inside a batch run."""
    if not 0 <= index < cfg.samples:
        raise IndexError("sample index out of range")
    batch = _eigvals_with_retry(cfg, np.array([index], dtype=np.uint64))
    return _to_sample(batch.eigenvalues[0], batch.trace_sq[0])


def sample_batch(cfg: McConfig, start: int, stop: int) -> list[SpectrumSample]:
    batch = _eigvals_with_retry(cfg, np.arange(start, stop, dtype=np.uint64))
    return [_to_sample(e, t) for e, t in zip(batch.eigenvalues, batch.trace_sq)]


def wilson_interval(count: int, n: int, z: float = _Z_997) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("need at least one trial")
    p = count / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass
class EmpiricalDistribution:
    spec: ProductSpec
    samples: int
    counts: dict[int, int]
    trace_sq_sum: float
    trace_sq_sumsq: float
    retries: int = 0
    meta: dict = field(default_factory=dict)

    def frequency(self, k: int) -> float:
        return self.counts.get(k, 0) / self.samples

    def frequencies(self) -> dict[int, float]:
        return {k: self.frequency(k) for k in self.support()}

    def support(self) -> list[int]:
        return list(range(self.spec.N % 2, self.spec.N + 1, 2))

    def interval(self, k: int, z: float = _Z_997) -> tuple[float, float]:
        return wilson_interval(self.counts.get(k, 0), self.samples, z)

    def mean_reals(self) -> float:
        return sum(k * c for k, c in self.counts.items()) / self.samples

    def mean_reals_stderr(self) -> float:
        mu = self.mean_reals()
        var = sum(c * (k - mu) ** 2 for k, c in self.counts.items()) / max(1, self.samples - 1)
        return math.sqrt(var / self.samples)

    def mean_trace_sq(self) -> tuple[float, float]:
        """Sample mean of tr P^2 and its standard error."""
        n = self.samples
        mean = self.trace_sq_sum / n
        var = max(0.0, (self.trace_sq_sumsq - n * mean * mean) / max(1, n - 1))
        return mean, math.sqrt(var / n)

    def to_json(self) -> dict:
        return {
            "spec": {"N": self.spec.N, "m": self.spec.m, "nu": list(self.spec.nu)},
            "samples": self.samples,
            "retries": self.retries,
            "mean_reals": self.mean_reals(),
            "counts": {
                str(k): {"count": self.counts.get(k, 0),
                         "frequency": self.frequency(k),
                         "ci_low": self.interval(k)[0],
                         "ci_high": self.interval(k)[1]}
                for k in self.support()},
            **({"meta": self.meta} if self.meta else {}),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def _chunks(cfg: McConfig) -> list[tuple[int, int]]:
    return [(s, min(s + cfg.chunk, cfg.samples)) for s in range(0, cfg.samples, cfg.chunk)]


def _map_chunks(cfg: McConfig, fn: Callable[[int, int], object]) -> list:
    chunks = _chunks(cfg)
    if cfg.workers == 1:
        return [fn(a, b) for a, b in chunks]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(lambda ab: fn(*ab), chunks))


def estimate_distribution(cfg: McConfig) -> EmpiricalDistribution:
    """Counts of samples by number of real eigenvalues."""
    chunk_size = max(1, min(cfg.chunk, 2**22 // max(1, cfg.spec.N ** 2 * cfg.spec.m)))
    cfg = McConfig(cfg.spec, cfg.samples, cfg.seed, cfg.workers, cfg.entry_law, chunk_size)

    def work(a, b):
        batch = _eigvals_with_retry(cfg, np.arange(a, b, dtype=np.uint64))
        counts = np.bincount(batch.real_counts, minlength=cfg.spec.N + 1)
        return counts, float(batch.trace_sq.sum()), float((batch.trace_sq ** 2).sum()), batch.retries

    results = _map_chunks(cfg, work)
    counts = np.sum([r[0] for r in results], axis=0)
    retries = sum(r[3] for r in results)
    if retries > 1e-6 * cfg.samples + 1:
        raise ArithmeticError(f"{retries} eigenvalue failures exceed the resampling budget")
    return EmpiricalDistribution(
        cfg.spec, cfg.samples, {k: int(c) for k, c in enumerate(counts) if c},
        math.fsum(r[1] for r in results), math.fsum(r[2] for r in results), retries,
        {"seed": cfg.seed, "entry_law": cfg.entry_law})


def histogram_real_global(cfg: McConfig, bins: int = 60, limit: float = 1.5) -> DensityGrid:
    """Histogram of real eigenvalues rescaled by N^{-m/2}, normalised to unit mass.

    The grid abscissae are bin centres on [-limit, limit]; ``meta`` carries
    the bin edges and the total number of real eigenvalues.
    """
    scale = cfg.spec.N ** (-0.5 * cfg.spec.m)
    edges = np.linspace(-limit, limit, bins + 1)
    chunk_size = max(1, min(cfg.chunk, 2**22 // max(1, cfg.spec.N ** 2 * cfg.spec.m)))
    cfg = McConfig(cfg.spec, cfg.samples, cfg.seed, cfg.workers, cfg.entry_law, chunk_size)

    def work(a, b):
        batch = _eigvals_with_retry(cfg, np.arange(a, b, dtype=np.uint64))
        ev = batch.eigenvalues
        reals = ev.real[ev.imag == 0.0] * scale
        hist, _ = np.histogram(reals, bins=edges)
        outside = int(np.count_nonzero(np.abs(reals) > limit))
        return hist, reals.size, outside

    results = _map_chunks(cfg, work)
    hist = np.sum([r[0] for r in results], axis=0)
    total = sum(r[1] for r in results)
    outside = sum(r[2] for r in results)
    width = edges[1] - edges[0]
    values = hist / (total * width) if total else np.zeros(bins)
    centres = 0.5 * (edges[:-1] + edges[1:])
    return DensityGrid(
        [float(c) for c in centres], [float(v) for v in values], cfg.spec.N, cfg.spec.m,
        cfg.spec.nu, "global", "real",
        {"edges": [float(e) for e in edges], "total_reals": int(total), "outside": outside,
         "samples": cfg.samples, "seed": cfg.seed, "entry_law": cfg.entry_law})


def _law_cdf(m: int, x: np.ndarray) -> np.ndarray:
    # antiderivative of |x|^{1/m-1}/(2m) clipped to [-1, 1]
    x = np.clip(x, -1.0, 1.0)
    return 0.5 * np.sign(x) * np.abs(x) ** (1.0 / m)


def global_law_bin_average(m: int, edges) -> np.ndarray:
    """Mean of the limiting real law over each bin (finite even at x = 0)."""
    edges = np.asarray(edges, dtype=float)
    return np.diff(_law_cdf(m, edges)) / np.diff(edges)


def l1_distance(grid: DensityGrid, other: DensityGrid | None = None,
                band: tuple[float, float] = (0.1, 0.9)) -> float:
    """L1 distance on band[0] <= |x| <= band[1], against the real law or another histogram."""
    edges = np.asarray(grid.meta["edges"])
    centres = 0.5 * (edges[:-1] + edges[1:])
    width = np.diff(edges)
    ref = global_law_bin_average(grid.m, edges) if other is None else np.asarray(other.values)
    sel = (np.abs(centres) >= band[0]) & (np.abs(centres) <= band[1])
    return float(np.sum(np.abs(np.asarray(grid.values)[sel] - ref[sel]) * width[sel]))
