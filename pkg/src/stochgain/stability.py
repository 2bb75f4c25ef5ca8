"""Stability verdicts for the multiplicative loop and its feedback variants.

Three nested notions of stability are classified from the gain distribution:

* median: ``median(x_K) -> 0``  iff  ``E[ln a] < 0``
* mean: ``E[x_K] -> 0``  iff  ``E[a] < 1``
* variance: ``Var(x_K) -> 0``  iff  ``E[a]^2 + Var(a) < 1``

The same machinery covers deterministic periodic gains (monodromy/geometric
mean), region boundary tracing in the gain-moment plane, and stabilization of
a first order plant by a stochastic feedback gain.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .distributions import (
    AlphaStats,
    Distribution,
    GridGain,
    NormalDelta,
    alpha_moments_from_a,
)
from .grids import GridPdf

__all__ = [
    "Stability",
    "StabilityVerdict",
    "PlantSpec",
    "classify",
    "median_limit_zero_mean",
    "region_boundaries",
    "folded_gain_distribution",
    "stabilization_verdict",
    "stabilization_region",
    "periodic_gain_analysis",
    "PeriodicGainAnalysis",
    "asymptotic_log_average",
]

#: Default half-width of the marginal band around each criterion boundary.
DEFAULT_EPS = 1e-9

_CRITERIA_TEXT = (
    "median: E[ln a] < 0; mean: E[a] < 1; variance: E[a]^2 + Var(a) < 1"
)


class Stability(enum.Enum):
    STABLE = "stable"
    MARGINAL = "marginal"
    UNSTABLE = "unstable"


@dataclass(frozen=True)
class StabilityVerdict:
    """Per-criterion verdicts with signed margins.

    A margin is the distance of the criterion expression from its boundary,
    positive on the stable side; ``-inf`` marks a criterion violated by an
    infinite moment.  Verdicts within ``eps`` of the boundary are reported
    marginal, never silently rounded to stable.
    """

    median: Stability
    mean: Stability
    variance: Stability
    margin_median: float
    margin_mean: float
    margin_variance: float
    criteria_used: str = _CRITERIA_TEXT

    def by_name(self, criterion: str) -> Stability:
        try:
            return {"median": self.median, "mean": self.mean, "variance": self.variance}[criterion]
        except KeyError:
            raise ValueError(f"unknown criterion {criterion!r}") from None


def _rate(margin: float, eps: float) -> Stability:
    if margin > eps:
        return Stability.STABLE
    if margin < -eps:
        return Stability.UNSTABLE
    return Stability.MARGINAL


def _verdict_from_margins(m_median: float, m_mean: float, m_variance: float,
                          eps: float, text: str = _CRITERIA_TEXT) -> StabilityVerdict:
    return StabilityVerdict(
        _rate(m_median, eps), _rate(m_mean, eps), _rate(m_variance, eps),
        m_median, m_mean, m_variance, text,
    )


def classify(dist: Distribution, eps: float = DEFAULT_EPS) -> StabilityVerdict:
    """Classify a gain distribution against all three stability criteria.

    Margins: ``-E[ln a]`` for the median, ``1 - E[a]`` for the mean and
    ``1 - (E[a]^2 + Var(a))`` for the variance.  Infinite gain moments force
    the mean/variance verdicts to unstable; the median is judged purely from
    the log-gain mean and an undefined log-gain mean is an error.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    stats = dist.alpha_stats()
    if not (stats.mu_finite and np.isfinite(stats.mu_alpha)):
        raise ValueError("median criterion undefined: log-gain mean is not finite")
    moments = dist.a_moments()
    m_median = -stats.mu_alpha
    m_mean = 1.0 - moments.mu_a if moments.mu_finite else -math.inf
    if moments.mu_finite and moments.var_finite:
        m_variance = 1.0 - (moments.mu_a ** 2 + moments.var_a)
    else:
        m_variance = -math.inf
    return _verdict_from_margins(m_median, m_mean, m_variance, eps)


def median_limit_zero_mean(stats: AlphaStats, eps: float = DEFAULT_EPS) -> float:
    """Limit of ``median(x_K)`` when the log gain has exactly zero mean.

    For a non-lattice log gain with bounded third moment the log-state median
    converges to ``-E[(alpha - mu)^3] / (6 var)``; exponentiating gives the
    limit of the state median.
    """
    if abs(stats.mu_alpha) > eps:
        raise ValueError("limit formula requires a zero log-gain mean")
    if not (stats.var_finite and stats.var_alpha > 0.0):
        raise ValueError("limit formula requires a positive finite log-gain variance")
    if not stats.third_finite:
        raise ValueError("limit formula requires a finite third central moment")
    return float(np.exp(-stats.third_central / (6.0 * stats.var_alpha)))


def _lognormal_mu_alpha(mu_a: float, sigma_a: float) -> float:
    return alpha_moments_from_a(mu_a, sigma_a)[0]


def region_boundaries(mu_a_values, sigma_a_values) -> dict[str, np.ndarray]:
    """Boundary polylines of the three stability regions in the gain plane.

    Axes are the gain mean (x) and gain standard deviation (y).  The mean
    boundary is the vertical line at 1 and the variance boundary the unit
    circle; both hold for arbitrary gain distributions.  The median boundary
    is the lognormal zero locus of the log-gain mean, found per sigma by
    bisection (1e-10) rather than algebraic rearrangement.
    """
    mu_a_values = np.asarray(mu_a_values, dtype=float)
    sigma_a_values = np.asarray(sigma_a_values, dtype=float)
    if np.any(mu_a_values <= 0.0) or np.any(sigma_a_values < 0.0):
        raise ValueError("grid values must be positive means and nonnegative stds")
    mu_hi = float(mu_a_values.max())

    mean_curve = np.column_stack([np.ones_like(sigma_a_values), sigma_a_values])

    var_sigmas = sigma_a_values[sigma_a_values < 1.0]
    variance_curve = np.column_stack([np.sqrt(1.0 - var_sigmas ** 2), var_sigmas])

    median_pts = []
    for sigma in sigma_a_values:
        if sigma == 0.0:
            median_pts.append((1.0, sigma))
            continue
        lo, hi = 1.0, max(2.0, mu_hi)
        while _lognormal_mu_alpha(hi, sigma) < 0.0:
            hi *= 2.0
        for _ in range(200):
            if hi - lo <= 1e-10:
                break
            mid = 0.5 * (lo + hi)
            if _lognormal_mu_alpha(mid, sigma) < 0.0:
                lo = mid
            else:
                hi = mid
        median_pts.append((0.5 * (lo + hi), sigma))
    median_curve = np.asarray(median_pts)

    return {"median": median_curve, "mean": mean_curve, "variance": variance_curve}


@dataclass(frozen=True)
class PlantSpec:
    """First order plant ``gamma / (z - tau)`` closed with a stochastic gain."""

    tau: float
    gamma_gain: float
    delta: Distribution

    def __post_init__(self):
        if not (np.isfinite(self.tau) and np.isfinite(self.gamma_gain)):
            raise ValueError("plant parameters must be finite")
        if self.gamma_gain == 0.0:
            raise ValueError("gamma_gain must be nonzero")


#: Atom-mass threshold at a = 0 above which the folded gain is rejected.
_ATOM_TOL = 1e-12

#: Probability mass allowed below the folded grid's lower edge.
_FOLD_FLOOR_MASS = 1e-12

#: Probability mass allowed outside the perturbation window.
_FOLD_WINDOW_TOL = 1e-9


def folded_gain_distribution(plant: PlantSpec, n: int = 16384, label: str = "") -> GridGain:
    """Distribution of the closed-loop gain magnitude ``a = |tau + gamma delta|``.

    The perturbation density is folded about the point where the closed-loop
    gain crosses zero and sampled onto a uniform grid.  For a normal
    perturbation the window spans ten standard deviations around the mean;
    other perturbations use their own extreme quantiles.  The mass outside the
    window is checked against a 1e-9 budget, never discarded silently.
    """
    delta = plant.delta
    tau, gamma = plant.tau, plant.gamma_gain
    if isinstance(delta, NormalDelta):
        if delta.degenerate:
            raise ValueError("degenerate perturbation has no density; classify the "
                             "deterministic gain instead")
        d_lo = delta.mu_delta - 10.0 * delta.sigma_delta
        d_hi = delta.mu_delta + 10.0 * delta.sigma_delta
    else:
        d_lo = float(delta.quantile(1e-12))
        d_hi = float(delta.quantile(1.0 - 1e-12))
    outside = float(delta.cdf(d_lo) + (1.0 - delta.cdf(d_hi)))
    if outside > _FOLD_WINDOW_TOL:
        raise ValueError(f"perturbation window loses {outside:.3e} probability mass")

    y_lo, y_hi = sorted((tau + gamma * d_lo, tau + gamma * d_hi))
    a_hi = max(abs(y_lo), abs(y_hi))
    if a_hi <= 0.0:
        raise ValueError("closed-loop gain is identically zero; log-gain undefined")

    def fold_pdf(a):
        return (delta.pdf((a - tau) / gamma) + delta.pdf((-a - tau) / gamma)) / abs(gamma)

    if y_lo < 0.0 < y_hi:
        # active fold: density is positive at a = 0; keep the sub-floor mass
        # below the atom budget and start the grid just above zero
        f0 = float(fold_pdf(0.0))
        if not np.isfinite(f0):
            raise ValueError(f"closed-loop gain carries an atom at zero above {_ATOM_TOL:.0e}")
        a_lo = min(_FOLD_FLOOR_MASS / max(f0, _FOLD_FLOOR_MASS), 1e-6 * a_hi)
    else:
        a_lo = min(abs(y_lo), abs(y_hi))
        if a_lo <= 0.0:
            a_lo = 1e-12 * a_hi
    nodes = np.linspace(a_lo, a_hi, n + 1)
    grid = GridPdf(a_lo, a_hi, fold_pdf(nodes))
    return GridGain(grid, label=label or "|tau + gamma*delta|")


def stabilization_verdict(plant: PlantSpec, eps: float = DEFAULT_EPS,
                          n_grid: int = 16384) -> StabilityVerdict:
    """Stability of the state magnitude of a plant under stochastic feedback.

    With a degenerate (zero-variance) perturbation this reduces exactly to the
    deterministic criterion ``|tau + gamma mu_delta| < 1`` for all three
    criteria; otherwise the folded gain distribution is built on a grid and
    classified like any other gain.
    """
    delta = plant.delta
    if isinstance(delta, NormalDelta) and delta.degenerate:
        a = abs(plant.tau + plant.gamma_gain * delta.mu_delta)
        if a == 0.0:
            raise ValueError("closed loop collapses to zero gain; log-gain undefined")
        return _verdict_from_margins(
            -math.log(a), 1.0 - a, 1.0 - a * a, eps,
            text="deterministic gain |tau + gamma*mu_delta|: " + _CRITERIA_TEXT,
        )
    return classify(folded_gain_distribution(plant, n=n_grid), eps)


def stabilization_region(nominal_values, sigma_values, eps: float = DEFAULT_EPS,
                         n_grid: int = 8192) -> dict[str, np.ndarray]:
    """Stability boundaries for ``a = |nominal + sigma Z|``, ``Z`` standard normal.

    Axes are the magnitude of the nominal closed-loop gain (x) and the
    effective feedback standard deviation (y).  For every sigma row the three
    margins are swept over the nominal grid and each sign change is located by
    linear interpolation; the polylines of crossings are returned per
    criterion.
    """
    nominal_values = np.asarray(nominal_values, dtype=float)
    sigma_values = np.asarray(sigma_values, dtype=float)
    if np.any(nominal_values < 0.0) or np.any(sigma_values < 0.0):
        raise ValueError("grids must be nonnegative")
    curves: dict[str, list] = {"median": [], "mean": [], "variance": []}
    for sigma in sigma_values:
        margins = {"median": [], "mean": [], "variance": []}
        for nominal in nominal_values:
            plant = PlantSpec(float(nominal), 1.0, NormalDelta(0.0, float(sigma)))
            v = stabilization_verdict(plant, eps, n_grid=n_grid)
            margins["median"].append(v.margin_median)
            margins["mean"].append(v.margin_mean)
            margins["variance"].append(v.margin_variance)
        for name, vals in margins.items():
            vals = np.asarray(vals)
            sign_change = np.nonzero(np.diff(np.signbit(vals)))[0]
            for i in sign_change:
                x0, x1 = nominal_values[i], nominal_values[i + 1]
                f0, f1 = vals[i], vals[i + 1]
                x_star = x0 - f0 * (x1 - x0) / (f1 - f0)
                curves[name].append((float(x_star), float(sigma)))
    return {name: np.asarray(pts).reshape(-1, 2) for name, pts in curves.items()}


@dataclass(frozen=True)
class PeriodicGainAnalysis:
    """Decay analysis of a deterministic periodic gain sequence."""

    monodromy: float
    geo_mean: float
    log_mean: float
    stable: bool


def periodic_gain_analysis(gains: Iterable[float]) -> PeriodicGainAnalysis:
    """Monodromy gain and geometric-mean stability of one period.

    The product over one period decides decay; equivalently the sequence is
    stable iff the arithmetic mean of ``ln |a_k|`` is negative.  ``geo_mean``
    is defined as ``exp(log_mean)`` so the two comparisons agree exactly.
    """
    gains = np.asarray(list(gains), dtype=float)
    if gains.size == 0:
        raise ValueError("gain sequence must be nonempty")
    if np.any(gains == 0.0) or not np.all(np.isfinite(gains)):
        raise ValueError("gains must be finite and nonzero")
    log_mean = float(np.mean(np.log(np.abs(gains))))
    return PeriodicGainAnalysis(
        monodromy=float(np.prod(gains)),
        geo_mean=float(np.exp(log_mean)),
        log_mean=log_mean,
        stable=bool(log_mean < 0.0),
    )


def asymptotic_log_average(gains: Iterable[float], window: int) -> float:
    """Average of ``ln |a_k|`` over the first ``window`` gains of a sequence.

    The loop state converges to zero precisely when ``window`` times this
    average diverges to minus infinity as the window grows.
    """
    if window < 1:
        raise ValueError("window must be at least 1")
    total = 0.0
    count = 0
    for g in gains:
        g = float(g)
        if g == 0.0 or not np.isfinite(g):
            raise ValueError("gains must be finite and nonzero")
        total += math.log(abs(g))
        count += 1
        if count == window:
            break
    if count < window:
        raise ValueError(f"sequence ended after {count} gains, window needs {window}")
    return total / window
