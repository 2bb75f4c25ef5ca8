"""Tail probabilities and concentration bounds for the K-step state.

For lognormal gains the tail ``Prob{x_K > x_bnd}`` is exact through the
complementary error function.  For everything else two classical upper bounds
are provided: the one-sided Chebyshev (Cantelli) bound, which needs only the
log-gain mean and variance and decays like ``1/K``, and the exponential
Chernoff bound ``e^{-cK}`` obtained by optimizing the log-gain moment
generating function.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import erfc

from .distributions import AlphaStats, Distribution, HalfCauchyGain, LogNormalGain

__all__ = [
    "TailReport",
    "ChernoffBound",
    "lognormal_tail",
    "cantelli_bound",
    "chernoff_bound",
    "sech_chernoff_closed_form",
    "convergence_in_probability_check",
    "tail_report",
]

#: Absolute tolerance of the golden-section search in lambda.
_GOLDEN_TOL = 1e-10

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def lognormal_tail(mu_alpha: float, sigma_alpha: float, K, x_bnd: float = 1.0):
    """Exact ``Prob{x_K > x_bnd}`` for a lognormal gain.

    The log state is normal with mean ``K mu_alpha`` and variance
    ``K sigma_alpha^2``; the tail is evaluated with the complementary error
    function so far tails keep full relative accuracy.
    """
    if sigma_alpha <= 0.0:
        raise ValueError("sigma_alpha must be positive")
    if x_bnd <= 0.0:
        raise ValueError("x_bnd must be positive")
    K = np.asarray(K, dtype=float)
    if np.any(K < 1):
        raise ValueError("K must be at least 1")
    z = (np.log(x_bnd) - K * mu_alpha) / np.sqrt(2.0 * K * sigma_alpha ** 2)
    out = 0.5 * erfc(z)
    return float(out) if out.ndim == 0 else out


def cantelli_bound(stats: AlphaStats, K):
    """One-sided Chebyshev bound ``Prob{x_K > 1} <= 1 / (1 + K mu^2/var)``.

    Applicable whenever the log gain has a negative mean and finite variance;
    raises otherwise.
    """
    if not (stats.mu_finite and np.isfinite(stats.mu_alpha)):
        raise ValueError("bound needs a finite log-gain mean")
    if stats.mu_alpha >= 0.0:
        raise ValueError("bound applies only when the log-gain mean is negative")
    if not (stats.var_finite and np.isfinite(stats.var_alpha) and stats.var_alpha > 0.0):
        raise ValueError("bound needs a finite positive log-gain variance")
    K = np.asarray(K, dtype=float)
    out = 1.0 / (1.0 + K * stats.mu_alpha ** 2 / stats.var_alpha)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ChernoffBound:
    """Optimized exponential tail bound ``Prob{x_K > 1} <= e^{-cK}``."""

    c: float
    lambda_star: float
    bound: np.ndarray


def _golden_max(fn, lo: float, hi: float, tol: float = _GOLDEN_TOL):
    """Golden-section maximizer for a concave objective on ``[lo, hi]``.

    Tolerates ``-inf`` objective values (they simply lose every comparison),
    which is how an infinite mgf inside the bracket is handled.  Near the flat
    top the comparisons drown in rounding noise before ``tol`` does, so one
    parabolic fit over a wider stencil polishes the maximizer afterwards.
    """
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fn(c), fn(d)
    while (b - a) > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fn(d)
    x = 0.5 * (a + b)
    h = max(1e-5 * (hi - lo), 1e-12)
    if lo + h < x < hi - h:
        f0, fm, fp = fn(x), fn(x - h), fn(x + h)
        curv = fm - 2.0 * f0 + fp
        if np.isfinite(curv) and curv < 0.0:
            shift = 0.5 * h * (fm - fp) / curv
            if abs(shift) < h:
                x = x + shift
    return x, fn(x)


def _default_beta(dist: Distribution, stats: AlphaStats) -> float:
    if isinstance(dist, LogNormalGain):
        # optimum sits at -mu/var; cap the bracket well beyond it
        return 8.0 * max(-stats.mu_alpha, 0.0) / stats.var_alpha + 1e-6
    if isinstance(dist, HalfCauchyGain):
        return 1.0 - 1e-9  # mgf blows up at lambda = 1
    # probe geometrically until the mgf quadrature stops being finite
    lam = 1.0
    if np.isfinite(dist.mgf_alpha(lam)):
        while lam < 64.0 and np.isfinite(dist.mgf_alpha(2.0 * lam)):
            lam *= 2.0
        return lam
    while lam > 2.0 ** -20 and not np.isfinite(dist.mgf_alpha(lam)):
        lam *= 0.5
    if not np.isfinite(dist.mgf_alpha(lam)):
        raise ValueError(
            "moment generating function of the log gain is infinite at every probed "
            "lambda; the log gain is heavy-tailed and no exponential bound exists"
        )
    return lam


def chernoff_bound(dist: Distribution, K, beta: Optional[float] = None) -> ChernoffBound:
    """Optimize ``c = sup_lambda -ln E[a^lambda]`` and bound the tail by ``e^{-cK}``.

    The objective is the log of the centered moment generating function with
    its sign flipped; it is concave, zero at ``lambda = 0`` and has positive
    slope exactly when the log-gain mean is negative, so ``c > 0`` iff the
    system is median stable.
    """
    stats = dist.alpha_stats()
    if stats.mu_alpha > 0.0:
        raise ValueError("exponential tail bound needs a nonpositive log-gain mean")
    if beta is None:
        beta = _default_beta(dist, stats)
    if beta <= 0.0:
        raise ValueError("beta must be positive")

    def objective(lam):
        with np.errstate(over="ignore"):
            mgf = dist.mgf_alpha(lam)
        return -np.log(mgf) if np.isfinite(mgf) and mgf > 0.0 else -np.inf

    lam, val = _golden_max(objective, 0.0, beta)
    c = float(val) if val > 0.0 else 0.0
    if c == 0.0:
        lam = 0.0
    K = np.atleast_1d(np.asarray(K, dtype=float))
    return ChernoffBound(c=c, lambda_star=float(lam), bound=np.exp(-c * K))


def sech_chernoff_closed_form(gamma: float) -> tuple[float, float]:
    """Closed-form Chernoff constants for the half-Cauchy gain.

    The log gain has mgf ``gamma^lambda / cos(pi lambda / 2)`` on
    ``|lambda| < 1``; maximizing its negated logarithm gives
    ``lambda* = (2/pi) arctan(-2 ln gamma / pi)`` and
    ``c = -lambda* ln gamma + ln cos(pi lambda*/2)``.
    Returns ``(lambda_star, c)``; requires ``0 < gamma < 1``.
    """
    if not (0.0 < gamma < 1.0):
        raise ValueError("closed form requires 0 < gamma < 1")
    lam = (2.0 / np.pi) * np.arctan(-2.0 * np.log(gamma) / np.pi)
    c = -lam * np.log(gamma) + np.log(np.cos(0.5 * np.pi * lam))
    return float(lam), float(c)


def convergence_in_probability_check(trace, epsilon: float) -> np.ndarray:
    """``Prob{x_K > epsilon}`` for every K recorded in an evolution trace.

    Uses the closed form when the trace came from a lognormal evolution,
    otherwise reads the mass above ``ln epsilon`` from the stored log-space
    densities.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    if trace.lognormal_params is not None:
        mu_alpha, sigma_alpha = trace.lognormal_params
        out = lognormal_tail(mu_alpha, sigma_alpha, trace.K_values, epsilon)
        return np.atleast_1d(out)
    if trace.zeta_pdfs is None:
        raise ValueError("trace carries neither closed-form parameters nor densities")
    thr = np.log(epsilon)
    return np.array([pdf.tail_above(thr) for pdf in trace.zeta_pdfs])


@dataclass
class TailReport:
    """Tail probability curves: exact values (when computable) and bounds."""

    K_values: np.ndarray
    exact: Optional[np.ndarray]
    cantelli: np.ndarray
    chernoff: Optional[np.ndarray]
    chernoff_c: Optional[float] = None
    lambda_star: Optional[float] = None

    def write_csv(self, fileobj) -> None:
        writer = csv.writer(fileobj, lineterminator="\n")
        writer.writerow(["K", "exact", "cantelli", "chernoff"])
        for i, k in enumerate(self.K_values):
            row = [int(k)]
            row.append(repr(float(self.exact[i])) if self.exact is not None else "")
            row.append(repr(float(self.cantelli[i])))
            row.append(repr(float(self.chernoff[i])) if self.chernoff is not None else "")
            writer.writerow(row)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            self.write_csv(fh)


def tail_report(dist: Distribution, K_values, exact_method: str = "auto",
                x_bnd: float = 1.0) -> TailReport:
    """Assemble exact tails and both bounds over a range of K.

    ``exact_method`` is one of ``auto`` (closed form for lognormal gains,
    grid convolution otherwise), ``closed_form``, ``grid`` or ``none``.
    Bounds always target the mass above one; the exact curve targets
    ``x_bnd``.
    """
    K = np.asarray(sorted(int(k) for k in K_values), dtype=int)
    if K.size == 0 or K[0] < 1:
        raise ValueError("K_values must be a nonempty collection of integers >= 1")
    stats = dist.alpha_stats()

    if exact_method == "auto":
        exact_method = "closed_form" if isinstance(dist, LogNormalGain) else "grid"

    if exact_method == "closed_form":
        if not isinstance(dist, LogNormalGain):
            raise ValueError("closed-form tails exist only for lognormal gains")
        exact = np.atleast_1d(lognormal_tail(dist.mu_alpha, dist.sigma_alpha, K, x_bnd))
    elif exact_method == "grid":
        from . import evolution  # deferred: evolution imports this module

        falpha = evolution.default_alpha_grid(dist, int(K[-1]))
        trace = evolution.evolve_grid(falpha, int(K[-1]), stride=1, keep_pdfs=True)
        thr = np.log(x_bnd)
        by_k = {int(k): pdf for k, pdf in zip(trace.K_values, trace.zeta_pdfs)}
        exact = np.array([by_k[int(k)].tail_above(thr) for k in K])
    elif exact_method == "none":
        exact = None
    else:
        raise ValueError(f"unknown exact_method {exact_method!r}")

    cantelli = np.clip(np.atleast_1d(cantelli_bound(stats, K)), 0.0, 1.0)
    try:
        cb = chernoff_bound(dist, K)
        chernoff = cb.bound
        c, lam = cb.c, cb.lambda_star
    except ValueError:
        chernoff, c, lam = None, None, None
    return TailReport(K, exact, cantelli, chernoff, chernoff_c=c, lambda_star=lam)
