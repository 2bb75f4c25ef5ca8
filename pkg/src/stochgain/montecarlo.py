"""Ensembles of sample paths of the multiplicative loop, kept in log space.

Paths are generated and stored as log-state trajectories: a path is the
running left-to-right sum of i.i.d. log-gain increments, so trajectories whose
natural-coordinate values overflow double precision remain exact.

Reproducibility scheme
----------------------
All draws come from a single counter-based Philox stream keyed by the seed.
Each increment consumes exactly one uniform (inverse-cdf sampling), and each
path owns a fixed-width block of the counter: path ``i`` uses draws
``[i * W, (i + 1) * W)`` where ``W`` is ``K_max`` rounded up to a multiple of
four (one Philox counter block yields four doubles).  Serial generation draws
the whole matrix row-major; a parallel worker reproduces any path bit-for-bit
by advancing the counter, so worker count never changes results.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
import numpy as np
from scipy.special import logsumexp

from .distributions import Distribution

__all__ = [
    "PathEnsemble",
    "SampleStats",
    "TailCurve",
    "simulate",
    "sample_stats",
    "tail_frequency_curve",
    "path_uniforms",
]

_UNIFORM_FLOOR = 2.0 ** -53  # removes the single non-invertible draw u == 0
_WILSON_Z = 1.959963984540054  # two-sided 95%

_LOG_HUGE = 709.0


def _padded_width(k_max: int) -> int:
    """Draws per path, rounded up so path blocks align with Philox counters."""
    return -(-k_max // 4) * 4


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    """``n_paths`` log-state trajectories over ``0..K_max``.

    ``log_paths[i, 0]`` is ``ln x_0 = 0``; column ``k`` holds ``ln x_k``.
    """

    spec: Distribution
    n_paths: int
    K_max: int
    seed: int
    log_paths: np.ndarray


def simulate(spec: Distribution, n_paths: int, k_max: int, seed: int) -> PathEnsemble:
    """Draw an ensemble of log-state trajectories.

    Deterministic given ``seed``; see the module docstring for the stream
    layout that makes serial and parallel generation agree.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be at least 1")
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    width = _padded_width(k_max)
    gen = np.random.Generator(np.random.Philox(seed))
    u = gen.random((n_paths, width))[:, :k_max]
    np.maximum(u, _UNIFORM_FLOOR, out=u)
    increments = spec.alpha_quantile(u)
    log_paths = np.empty((n_paths, k_max + 1), dtype=float)
    log_paths[:, 0] = 0.0
    np.cumsum(increments, axis=1, out=log_paths[:, 1:])  # left-to-right exact order
    return PathEnsemble(spec, n_paths, k_max, int(seed), log_paths)


def path_uniforms(seed: int, k_max: int, index: int) -> np.ndarray:
    """Reproduce one path's uniform block without generating the others."""
    width = _padded_width(k_max)
    bg = np.random.Philox(seed)
    bg.advance(index * (width // 4))  # advance counts 4-double counter blocks
    u = np.random.Generator(bg).random(width)[:k_max]
    return np.maximum(u, _UNIFORM_FLOOR)


@dataclass(frozen=True, eq=False)
class SampleStats:
    """Sample summaries of ``x_K``; the mean is evaluated by log-sum-exp so its
    magnitude is reported even when individual ``e^{zeta}`` values overflow."""

    K: int
    n_paths: int
    median: float
    mean: float
    log_mean: float
    zeta: np.ndarray

    def tail_freq(self, threshold: float) -> float:
        """Fraction of paths with ``x_K`` strictly above ``threshold``."""
        if threshold <= 0.0:
            return 1.0
        return float(np.count_nonzero(self.zeta > np.log(threshold)) / self.n_paths)


def sample_stats(ens: PathEnsemble, K: int) -> SampleStats:
    if not 0 <= K <= ens.K_max:
        raise ValueError(f"K must lie in [0, {ens.K_max}]")
    zeta = ens.log_paths[:, K]
    with np.errstate(over="ignore"):
        median = float(np.exp(np.median(zeta)))
        log_mean = float(logsumexp(zeta) - np.log(ens.n_paths))
        mean = float("inf") if log_mean > _LOG_HUGE else float(np.exp(log_mean))
    return SampleStats(K, ens.n_paths, median, mean, log_mean, zeta)


def _wilson_interval(hits: np.ndarray, n: int, z: float = _WILSON_Z):
    p = hits / n
    z2n = z * z / n
    denom = 1.0 + z2n
    center = (p + 0.5 * z2n) / denom
    half = (z / denom) * np.sqrt(p * (1.0 - p) / n + z2n / (4.0 * n))
    return np.clip(center - half, 0.0, 1.0), np.clip(center + half, 0.0, 1.0)


@dataclass(frozen=True)
class TailCurve:
    """Per-K exceedance frequencies with 95% Wilson confidence intervals."""

    threshold: float
    K_values: np.ndarray
    freq: np.ndarray
    wilson_lo: np.ndarray
    wilson_hi: np.ndarray

    def write_csv(self, fileobj) -> None:
        writer = csv.writer(fileobj, lineterminator="\n")
        writer.writerow(["K", "tail_freq", "wilson_lo", "wilson_hi"])
        for k, f, lo, hi in zip(self.K_values, self.freq, self.wilson_lo, self.wilson_hi):
            writer.writerow([int(k), repr(float(f)), repr(float(lo)), repr(float(hi))])


def tail_frequency_curve(ens: PathEnsemble, threshold: float) -> TailCurve:
    """Exceedance frequency of ``threshold`` at every step of the ensemble."""
    if threshold <= 0.0:
        raise ValueError("threshold must be positive")
    thr = np.log(threshold)
    hits = np.count_nonzero(ens.log_paths > thr, axis=0).astype(float)
    lo, hi = _wilson_interval(hits, ens.n_paths)
    K = np.arange(ens.K_max + 1)
    return TailCurve(threshold, K, hits / ens.n_paths, lo, hi)
