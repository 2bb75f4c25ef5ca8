"""Evolution of the state distribution over K steps.

Two routes are provided.  For lognormal gains the log-state stays normal and
every summary has a closed form.  For anything else the log-space density is
evolved by repeated discrete convolution on an expanding uniform grid, and the
summaries are read off the grid cdf.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import csv
import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.signal import fftconvolve
from scipy.special import logsumexp

from . import bounds
from .grids import GridPdf, MassLossError

__all__ = [
    "EvolutionTrace",
    "evolve_lognormal",
    "evolve_grid",
    "goodman_variance",
    "default_alpha_grid",
]

#: Grid values below this are trimmed away after each convolution step.
TRIM_FLOOR = 1e-300

#: A convolution step that loses more mass than this aborts the evolution.
STEP_MASS_TOL = 1e-6

#: Default log-space resolution: nodes per unit of sigma_alpha * sqrt(K) span.
NODES_PER_SIGMA_UNIT = 4096

_LOG_HUGE = 709.0  # ln of the largest double


@dataclass
class EvolutionTrace:
    """Per-K summaries of the state distribution, optionally with densities.

    ``means_x`` and ``variances_x`` may contain ``inf`` where the moment is
    infinite or cannot be certified finite on the working grid.
    """

    K_values: np.ndarray
    medians_x: np.ndarray
    means_x: np.ndarray
    variances_x: np.ndarray
    tail_at_one: np.ndarray
    zeta_pdfs: Optional[list[GridPdf]] = None
    renorm_total: float = 0.0
    lognormal_params: Optional[tuple[float, float]] = None

    def write_csv(self, fileobj) -> None:
        writer = csv.writer(fileobj, lineterminator="\n")
        writer.writerow(["K", "median_x", "mean_x", "var_x", "tail_at_one"])
        for k, med, mean, var, tail in zip(
            self.K_values, self.medians_x, self.means_x, self.variances_x, self.tail_at_one
        ):
            writer.writerow([int(k), repr(float(med)), repr(float(mean)),
                             repr(float(var)), repr(float(tail))])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            self.write_csv(fh)


def goodman_variance(mu_a: float, var_a: float, k: int) -> float:
    """Exact variance of a product of ``k`` i.i.d. factors.

    ``(var_a + mu_a^2)^k - mu_a^{2k}``, evaluated through ``log1p``/``expm1``
    so small variances do not cancel away.  Overflow is reported as ``inf``,
    never raised.
    """
    if var_a < 0.0:
        raise ValueError("var_a must be nonnegative")
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k == 0 or var_a == 0.0:
        return 0.0
    if mu_a == 0.0:
        log_var = k * np.log(var_a)
        return float("inf") if log_var > _LOG_HUGE else float(np.exp(log_var))
    mu2 = mu_a * mu_a
    growth = k * np.log1p(var_a / mu2)  # k * ln((var + mu^2)/mu^2) >= 0
    log_mu2k = k * np.log(mu2)
    # ln(e^growth - 1): switch to the asymptote once the -1 is invisible
    log_gap = growth if growth > 50.0 else float(np.log(np.expm1(growth)))
    log_result = log_mu2k + log_gap
    if log_result > _LOG_HUGE:
        return float("inf")
    return float(np.exp(log_result))


def evolve_lognormal(mu_alpha: float, sigma_alpha: float, K_values,
                     keep_pdfs: bool = False, pdf_nodes: int = 4096,
                     pdf_extent: float = 12.0) -> EvolutionTrace:
    """Closed-form evolution for a lognormal gain.

    The log state after K steps is normal with mean ``K mu_alpha`` and
    variance ``K sigma_alpha^2``; medians, means, variances and the mass above
    one all follow in closed form.
    """
    if sigma_alpha <= 0.0:
        raise ValueError("sigma_alpha must be positive")
    K = np.asarray(sorted(int(k) for k in K_values), dtype=int)
    if K.size == 0 or K[0] < 1:
        raise ValueError("K_values must be a nonempty collection of integers >= 1")

    var_alpha = sigma_alpha ** 2
    log_mu_a = mu_alpha + 0.5 * var_alpha
    medians = np.exp(K * mu_alpha)
    with np.errstate(over="ignore"):
        means = np.exp(K * log_mu_a)
    variances = np.array([goodman_variance(np.exp(log_mu_a), _lognormal_var_a(mu_alpha, var_alpha), int(k))
                          for k in K])
    tails = bounds.lognormal_tail(mu_alpha, sigma_alpha, K, 1.0)

    pdfs = None
    if keep_pdfs:
        pdfs = []
        for k in K:
            center = k * mu_alpha
            half = pdf_extent * sigma_alpha * np.sqrt(k)
            t = np.linspace(center - half, center + half, pdf_nodes + 1)
            z = (t - center) / (sigma_alpha * np.sqrt(k))
            vals = np.exp(-0.5 * z * z) / (sigma_alpha * np.sqrt(2.0 * np.pi * k))
            pdfs.append(GridPdf(t[0], t[-1], vals))

    return EvolutionTrace(K, medians, means, variances, np.atleast_1d(tails),
                          zeta_pdfs=pdfs, lognormal_params=(mu_alpha, sigma_alpha))


def _lognormal_var_a(mu_alpha, var_alpha):
    return float(np.expm1(var_alpha) * np.exp(2.0 * mu_alpha + var_alpha))


def default_alpha_grid(dist, k_max: int, nodes_per_unit: int = NODES_PER_SIGMA_UNIT,
                       tail_mass: float = 1e-14) -> GridPdf:
    """Log-space grid of a gain density sized for a K-step evolution.

    Extent covers all but ``tail_mass`` of each tail; spacing is
    ``sigma_alpha * sqrt(k_max) / nodes_per_unit`` so the final convolution
    still resolves the evolved density.
    """
    stats = dist.alpha_stats()
    sigma = float(np.sqrt(stats.var_alpha))
    if sigma <= 0.0:
        raise ValueError("gain distribution must have positive log-space variance")
    lo = float(dist.alpha_quantile(tail_mass))
    hi = float(dist.alpha_quantile(1.0 - tail_mass))
    step = sigma * np.sqrt(k_max) / nodes_per_unit
    n = max(int(np.ceil((hi - lo) / step)), 16)
    nodes = np.linspace(lo, lo + n * step, n + 1)
    return GridPdf(nodes[0], nodes[-1], dist.alpha_pdf(nodes))


def _grid_median_and_tail(lo: float, step: float, vals: np.ndarray) -> tuple[float, float]:
    c = cumulative_trapezoid(vals, dx=step, initial=0.0)
    total = c[-1]
    target = 0.5 * total
    i = int(np.clip(np.searchsorted(c, target, side="left"), 1, c.size - 1))
    span = c[i] - c[i - 1]
    frac = (target - c[i - 1]) / span if span > 0.0 else 0.0
    median = lo + step * (i - 1 + frac)
    nodes = lo + step * np.arange(vals.size)
    tail = total - np.interp(0.0, nodes, c)
    return float(median), float(np.clip(tail / total, 0.0, 1.0))


def _grid_log_exp_moment(f: GridPdf, order: int) -> Optional[float]:
    """``ln ∫ e^{order t} f(t) dt`` by trapezoid, or ``None`` if the upper
    grid edge dominates (the moment cannot be certified finite)."""
    t = f.nodes
    with np.errstate(divide="ignore"):
        logs = order * t + np.log(f.values)
    w = np.full(t.size, f.step)
    w[0] = w[-1] = 0.5 * f.step
    total = float(logsumexp(logs + np.log(w)))
    if not np.isfinite(total):
        return None
    if logs[-1] + np.log(f.step) > total + np.log(_EDGE_FRACTION_MOMENT):
        return None
    return total


_EDGE_FRACTION_MOMENT = 1e-12


def evolve_grid(falpha: GridPdf, k_max: int, stride: int = 1,
                keep_pdfs: bool = False) -> EvolutionTrace:
    """Evolve a log-space gain density by repeated discrete convolution.

    The grid grows by the gain support each step (linear convolution, output
    length ``n1 + n2 - 1``), is trimmed where the density falls below
    ``TRIM_FLOOR``, and is renormalized; per-step drift is accumulated in
    ``renorm_total``.  A step that loses more than ``STEP_MASS_TOL`` of mass
    raises :class:`MassLossError` carrying the offending K.

    Means and variances of the state are derived from the input grid's gain
    moments through the exact product law; ``inf`` marks a moment the grid's
    window cannot certify finite (heavy upper tails).
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    if stride < 1:
        raise ValueError("stride must be at least 1")
    record = sorted({1, int(k_max), *range(stride, k_max + 1, stride)})

    log_mu_a = _grid_log_exp_moment(falpha, 1)
    log_m2_a = _grid_log_exp_moment(falpha, 2)
    mu_a = var_a = None
    if log_mu_a is not None and log_m2_a is not None:
        mu_a = float(np.exp(log_mu_a))
        var_a = max(float(np.exp(log_m2_a)) - mu_a * mu_a, 0.0)

    base = falpha.values
    vals = base.copy()
    lo = falpha.lo
    step = falpha.step
    renorm = 0.0

    ks, medians, means, variances, tails = [], [], [], [], []
    pdfs = [] if keep_pdfs else None

    for k in range(1, k_max + 1):
        if k > 1:
            vals = fftconvolve(vals, base) * step
            lo += falpha.lo
            np.clip(vals, 0.0, None, out=vals)
            keep = np.nonzero(vals >= TRIM_FLOOR)[0]
            if keep.size == 0:
                raise MassLossError("density vanished during convolution", step=k)
            vals = vals[keep[0]: keep[-1] + 1]
            lo += step * keep[0]
            mass = float(np.trapezoid(vals, dx=step))
            if abs(mass - 1.0) > STEP_MASS_TOL:
                raise MassLossError(
                    f"convolution step {k} lost {abs(mass - 1.0):.3e} of probability mass",
                    step=k,
                )
            vals = vals / mass
            renorm += abs(mass - 1.0)
        if k in record:
            if keep_pdfs:
                # read the summaries off the stored grid so the monotone
                # transform identity median_x = exp(median_zeta) is bit-exact
                pdf = GridPdf(lo, lo + step * (vals.size - 1), vals)
                pdfs.append(pdf)
                median_z, tail = pdf.quantile(0.5), pdf.tail_above(0.0)
            else:
                median_z, tail = _grid_median_and_tail(lo, step, vals)
            ks.append(k)
            medians.append(np.exp(median_z))
            if mu_a is None:
                means.append(float("inf"))
            else:
                log_mean = k * np.log(mu_a) if mu_a > 0.0 else -np.inf
                means.append(float("inf") if log_mean > _LOG_HUGE else float(np.exp(log_mean)))
            if mu_a is None or var_a is None:
                variances.append(float("inf"))
            else:
                variances.append(goodman_variance(mu_a, var_a, k))
            tails.append(tail)

    return EvolutionTrace(
        np.asarray(ks, dtype=int),
        np.asarray(medians),
        np.asarray(means),
        np.asarray(variances),
        np.asarray(tails),
        zeta_pdfs=pdfs,
        renorm_total=renorm,
    )
