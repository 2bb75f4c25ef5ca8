"""Gain distributions for the multiplicative feedback loop ``x_{k+1} = a_k x_k``.

Each family exposes its density, cdf, quantile and sampler in the natural
coordinates, plus the log-space view that drives every stability verdict:
the moments of ``alpha = ln a``, the moments of ``a`` itself, and the moment
generating function of ``alpha``.

All samplers are single-uniform inverse-cdf transforms, so one uniform draw
maps to exactly one gain draw.  That keeps Monte Carlo streams counter-aligned
(see :mod:`stochgain.montecarlo`) and makes every sampler deterministic given
the generator state.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import simpson
from scipy.special import ndtr, ndtri

from .grids import GridPdf

__all__ = [
    "AlphaStats",
    "AMoments",
    "Distribution",
    "LogNormalGain",
    "HalfCauchyGain",
    "NormalDelta",
    "GridGain",
    "alpha_moments_from_a",
    "a_moments_from_alpha",
    "distribution_from_json",
]

#: Smallest uniform variate the inverse-cdf samplers will accept.  Generator
#: output lies in [0, 1); flooring removes the single non-invertible point 0.
_UNIFORM_FLOOR = 2.0 ** -53

#: Quadrature resolution for log-space moments of grid-backed gains.
_LOG_QUAD_NODES = 1 << 15

#: A moment integral whose upper grid edge contributes more than this fraction
#: is treated as divergent (the window cannot certify a finite value).
_EDGE_FRACTION = 1e-12


@dataclass(frozen=True)
class AlphaStats:
    """Moments of ``alpha = ln a``: mean, variance and third central moment."""

    mu_alpha: float
    var_alpha: float
    third_central: float
    mu_finite: bool = True
    var_finite: bool = True
    third_finite: bool = True


@dataclass(frozen=True)
class AMoments:
    """Mean and variance of the gain ``a``; ``None`` marks an infinite moment.

    Infinite moments are carried as explicit ``None`` flags rather than
    floating-point infinities so they cannot silently propagate through
    arithmetic in the classifiers.
    """

    mu_a: Optional[float]
    var_a: Optional[float]

    @property
    def mu_finite(self) -> bool:
        return self.mu_a is not None

    @property
    def var_finite(self) -> bool:
        return self.var_a is not None


def alpha_moments_from_a(mu_a: float, sigma_a: float) -> tuple[float, float]:
    """Map lognormal mean/std of ``a`` to the mean/variance of ``ln a``."""
    if mu_a <= 0.0:
        raise ValueError("lognormal moment mapping needs mu_a > 0")
    ratio = (sigma_a * sigma_a) / (mu_a * mu_a)
    var_alpha = float(np.log1p(ratio))
    mu_alpha = float(np.log(mu_a) - 0.5 * var_alpha)
    return mu_alpha, var_alpha


def a_moments_from_alpha(mu_alpha: float, var_alpha: float) -> tuple[float, float]:
    """Inverse of :func:`alpha_moments_from_a`: lognormal mean/variance of ``a``."""
    if var_alpha < 0.0:
        raise ValueError("var_alpha must be nonnegative")
    mu_a = float(np.exp(mu_alpha + 0.5 * var_alpha))
    var_a = float(np.expm1(var_alpha) * np.exp(2.0 * mu_alpha + var_alpha))
    return mu_a, var_a


def _floor_uniform(u):
    return np.maximum(u, _UNIFORM_FLOOR)


class Distribution:
    """Common protocol for the gain/perturbation families.

    Instances are immutable after construction and safe to share across
    threads; samplers take a caller-owned :class:`numpy.random.Generator`.
    """

    KIND = ""

    # -- natural coordinates -------------------------------------------------
    def pdf(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def quantile(self, q):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        """Inverse-cdf draw(s); exactly one uniform consumed per draw."""
        return self.quantile(_floor_uniform(rng.random(size)))

    # -- log coordinates -----------------------------------------------------
    def alpha_pdf(self, alpha):
        """Density of ``alpha = ln a``; defined for distributions on ``a > 0``."""
        raise NotImplementedError

    def alpha_quantile(self, q):
        """Quantile of ``alpha = ln a``; the log of the natural quantile."""
        return np.log(self.quantile(q))

    def alpha_stats(self) -> AlphaStats:
        raise NotImplementedError

    def a_moments(self) -> AMoments:
        raise NotImplementedError

    def mgf_alpha(self, lam: float) -> float:
        """``E[e^{lam * ln a}] = E[a^lam]``; ``inf`` is a value, not an error."""
        raise NotImplementedError

    # -- serialization ---------------------------------------------------------
    def _params(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> dict:
        return {"kind": self.KIND, "params": self._params(), "label": self.label}


@dataclass(frozen=True)
class LogNormalGain(Distribution):
    """Gain whose logarithm is normal with mean ``mu_alpha``, std ``sigma_alpha``."""

    mu_alpha: float
    sigma_alpha: float
    label: str = ""

    KIND = "lognormal"

    def __post_init__(self):
        if not np.isfinite(self.mu_alpha):
            raise ValueError("mu_alpha must be finite")
        if not (np.isfinite(self.sigma_alpha) and self.sigma_alpha > 0.0):
            raise ValueError("sigma_alpha must be a positive real")

    @classmethod
    def from_a_moments(cls, mu_a: float, sigma_a: float, label: str = "") -> "LogNormalGain":
        mu_alpha, var_alpha = alpha_moments_from_a(mu_a, sigma_a)
        return cls(mu_alpha, float(np.sqrt(var_alpha)), label)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pos = x > 0.0
        xp = x[pos]
        z = (np.log(xp) - self.mu_alpha) / self.sigma_alpha
        out[pos] = np.exp(-0.5 * z * z) / (xp * self.sigma_alpha * np.sqrt(2.0 * np.pi))
        return float(out) if out.ndim == 0 else out

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pos = x > 0.0
        out[pos] = ndtr((np.log(x[pos]) - self.mu_alpha) / self.sigma_alpha)
        return float(out) if out.ndim == 0 else out

    def quantile(self, q):
        return np.exp(self.alpha_quantile(q))

    def alpha_quantile(self, q):
        return self.mu_alpha + self.sigma_alpha * ndtri(q)

    def alpha_pdf(self, alpha):
        z = (np.asarray(alpha, dtype=float) - self.mu_alpha) / self.sigma_alpha
        out = np.exp(-0.5 * z * z) / (self.sigma_alpha * np.sqrt(2.0 * np.pi))
        return float(out) if out.ndim == 0 else out

    def alpha_stats(self) -> AlphaStats:
        # ln a is normal, hence symmetric: third central moment is exactly zero
        return AlphaStats(self.mu_alpha, self.sigma_alpha ** 2, 0.0)

    def a_moments(self) -> AMoments:
        mu_a, var_a = a_moments_from_alpha(self.mu_alpha, self.sigma_alpha ** 2)
        return AMoments(mu_a, var_a)

    def mgf_alpha(self, lam: float) -> float:
        return float(np.exp(self.mu_alpha * lam + 0.5 * (self.sigma_alpha * lam) ** 2))

    def mode(self) -> float:
        return float(np.exp(self.mu_alpha - self.sigma_alpha ** 2))

    def median(self) -> float:
        return float(np.exp(self.mu_alpha))

    def _params(self) -> dict:
        return {"mu_alpha": self.mu_alpha, "sigma_alpha": self.sigma_alpha}


@dataclass(frozen=True)
class HalfCauchyGain(Distribution):
    """Magnitude of a Cauchy variable with scale ``gamma``.

    Every moment of the gain itself is infinite, yet ``ln a`` follows the
    light-tailed hyperbolic-secant density ``(1/pi) sech(alpha - ln gamma)``
    with all moments finite.
    """

    gamma: float
    label: str = ""

    KIND = "half_cauchy"

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma > 0.0):
            raise ValueError("gamma must be a positive real")

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        ok = x >= 0.0
        r = x[ok] / self.gamma
        out[ok] = (2.0 / (np.pi * self.gamma)) / (1.0 + r * r)
        return float(out) if out.ndim == 0 else out

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        ok = x >= 0.0
        out[ok] = (2.0 / np.pi) * np.arctan(x[ok] / self.gamma)
        return float(out) if out.ndim == 0 else out

    def quantile(self, q):
        q = np.asarray(q, dtype=float)
        out = self.gamma * np.tan(0.5 * np.pi * q)
        return float(out) if out.ndim == 0 else out

    def alpha_quantile(self, q):
        q = np.asarray(q, dtype=float)
        out = np.log(self.gamma) + np.log(np.tan(0.5 * np.pi * q))
        return float(out) if out.ndim == 0 else out

    def alpha_pdf(self, alpha):
        # sech form stays finite for arbitrarily large |alpha|, unlike the
        # raw change of variables pdf(e^alpha) * e^alpha
        out = 1.0 / (np.pi * np.cosh(np.asarray(alpha, dtype=float) - np.log(self.gamma)))
        return float(out) if out.ndim == 0 else out

    def alpha_stats(self) -> AlphaStats:
        # the sech density is symmetric about ln gamma with variance pi^2/4
        return AlphaStats(float(np.log(self.gamma)), np.pi ** 2 / 4.0, 0.0)

    def a_moments(self) -> AMoments:
        return AMoments(None, None)

    def mgf_alpha(self, lam: float) -> float:
        if abs(lam) >= 1.0:
            return float("inf")
        return float(self.gamma ** lam / np.cos(0.5 * np.pi * lam))

    def _params(self) -> dict:
        return {"gamma": self.gamma}


@dataclass(frozen=True)
class NormalDelta(Distribution):
    """Normal feedback perturbation; not a gain (support covers all reals).

    ``sigma_delta = 0`` is accepted as the deterministic limit used by the
    stabilization analysis; it has no density, only a point mass at the mean.
    """

    mu_delta: float
    sigma_delta: float
    label: str = ""

    KIND = "normal_delta"

    def __post_init__(self):
        if not np.isfinite(self.mu_delta):
            raise ValueError("mu_delta must be finite")
        if not (np.isfinite(self.sigma_delta) and self.sigma_delta >= 0.0):
            raise ValueError("sigma_delta must be a nonnegative real")

    @property
    def degenerate(self) -> bool:
        return self.sigma_delta == 0.0

    def pdf(self, x):
        if self.degenerate:
            raise ValueError("degenerate perturbation has no density")
        z = (np.asarray(x, dtype=float) - self.mu_delta) / self.sigma_delta
        out = np.exp(-0.5 * z * z) / (self.sigma_delta * np.sqrt(2.0 * np.pi))
        return float(out) if out.ndim == 0 else out

    def cdf(self, x):
        if self.degenerate:
            out = np.where(np.asarray(x, dtype=float) >= self.mu_delta, 1.0, 0.0)
        else:
            out = ndtr((np.asarray(x, dtype=float) - self.mu_delta) / self.sigma_delta)
        return float(out) if np.ndim(out) == 0 else out

    def quantile(self, q):
        q = np.asarray(q, dtype=float)
        if self.degenerate:
            out = np.full_like(q, self.mu_delta)
        else:
            out = self.mu_delta + self.sigma_delta * ndtri(q)
        return float(out) if out.ndim == 0 else out

    def _no_log(self, what):
        raise ValueError(f"{what} undefined: the perturbation's support includes a <= 0")

    def _positive_point_mass(self) -> bool:
        # the degenerate member with a positive mean is a valid deterministic
        # gain, so its log-space view stays defined
        return self.degenerate and self.mu_delta > 0.0

    def alpha_pdf(self, alpha):
        self._no_log("log-space density")

    def alpha_quantile(self, q):
        if self._positive_point_mass():
            q = np.asarray(q, dtype=float)
            out = np.full_like(q, np.log(self.mu_delta))
            return float(out) if out.ndim == 0 else out
        self._no_log("log-space quantile")

    def alpha_stats(self) -> AlphaStats:
        if self._positive_point_mass():
            return AlphaStats(float(np.log(self.mu_delta)), 0.0, 0.0)
        self._no_log("log-space moments")

    def a_moments(self) -> AMoments:
        return AMoments(self.mu_delta, self.sigma_delta ** 2)

    def mgf_alpha(self, lam: float) -> float:
        if self._positive_point_mass():
            return float(self.mu_delta ** lam)
        self._no_log("log-space moment generating function")

    def _params(self) -> dict:
        return {"mu_delta": self.mu_delta, "sigma_delta": self.sigma_delta}


@dataclass(frozen=True, eq=False)
class GridGain(Distribution):
    """Gain distribution given numerically on a uniform grid over ``a > 0``."""

    grid: GridPdf
    label: str = ""

    KIND = "grid"

    def __post_init__(self):
        if self.grid.lo <= 0.0:
            raise ValueError("grid gains must be supported strictly inside a > 0")

    def pdf(self, x):
        return self.grid.evaluate(x)

    def cdf(self, x):
        return self.grid.cdf(x)

    def quantile(self, q):
        return self.grid.quantile(q)

    def alpha_pdf(self, alpha):
        a = np.exp(np.asarray(alpha, dtype=float))
        out = self.grid.evaluate(a) * a
        return float(out) if out.ndim == 0 else out

    def _log_nodes(self):
        t = np.linspace(np.log(self.grid.lo), np.log(self.grid.hi), _LOG_QUAD_NODES + 1)
        a = np.exp(t)
        w = self.grid.evaluate(a) * a
        return t, w

    def alpha_stats(self) -> AlphaStats:
        # integrate in log coordinates: the ln-singularity of the natural
        # coordinates turns into plain exponential decay at the lower edge
        t, w = self._log_nodes()
        z = simpson(w, x=t)
        if z <= 0.0:
            raise ValueError("grid carries no mass inside its support")
        mu = simpson(t * w, x=t) / z
        d = t - mu
        var = simpson(d * d * w, x=t) / z
        third = simpson(d ** 3 * w, x=t) / z
        return AlphaStats(float(mu), float(var), float(third))

    def a_moments(self) -> AMoments:
        x = self.grid.nodes
        f = self.grid.values
        h = self.grid.step
        m1 = float(np.trapezoid(x * f, dx=h))
        m2 = float(np.trapezoid(x * x * f, dx=h))
        # an upper edge that still contributes marks a tail too heavy for the
        # window: refuse to certify the moment rather than report a truncation
        if x[-1] * f[-1] * h > _EDGE_FRACTION * m1:
            return AMoments(None, None)
        if x[-1] * x[-1] * f[-1] * h > _EDGE_FRACTION * m2:
            return AMoments(m1, None)
        return AMoments(m1, m2 - m1 * m1)

    def mgf_alpha(self, lam: float) -> float:
        t, w = self._log_nodes()
        integrand = w * np.exp(lam * t)
        val = float(simpson(integrand, x=t))
        dt = t[1] - t[0]
        edge = integrand[-1] if lam >= 0.0 else integrand[0]
        if edge * dt > _EDGE_FRACTION * val:
            return float("inf")
        return val

    def _params(self) -> dict:
        return self.grid.to_json_obj()


_KINDS = {cls.KIND: cls for cls in (LogNormalGain, HalfCauchyGain, NormalDelta, GridGain)}


def distribution_from_json(obj: dict) -> Distribution:
    """Rebuild a distribution from its ``{"kind", "params", "label"}`` form."""
    try:
        kind = obj["kind"]
        params = dict(obj["params"])
    except (KeyError, TypeError) as exc:
        raise ValueError("distribution object needs 'kind' and 'params' fields") from exc
    label = obj.get("label", "")
    if kind not in _KINDS:
        raise ValueError(f"unknown distribution kind {kind!r}")
    if kind == GridGain.KIND:
        return GridGain(GridPdf.from_json_obj(params), label=label)
    return _KINDS[kind](**params, label=label)
