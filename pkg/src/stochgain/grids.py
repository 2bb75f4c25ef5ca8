"""Densities on uniform grids and the log/exp change of variables.

A single grid type carries densities in the natural coordinates (gain ``a``,
state ``x``) and in the logarithmic coordinates (``alpha = ln a``,
``zeta = ln x``).  Multiplication of independent gains becomes addition of
their logarithms, so log-space grids are the workhorse for evolving the state
distribution by repeated convolution.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

__all__ = [
    "GridPdf",
    "MassLossError",
    "from_distribution",
    "to_alpha_space",
    "to_a_space",
    "grid_quantile",
    "alpha_space_pdf",
    "x_space_density",
]

#: Largest tolerated deviation of a grid's trapezoid mass from one.
MASS_TOL = 1e-6

#: A density needs at least this many cells to be worth trapezoid arithmetic.
MIN_CELLS = 16


class MassLossError(ValueError):
    """A grid operation lost more probability mass than tolerated.

    ``step`` carries the evolution step at which the loss occurred when the
    error is raised during repeated convolution, otherwise it is ``None``.
    """

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


@dataclass(frozen=True, eq=False)
class GridPdf:
    """A probability density sampled at the ``n + 1`` nodes of a uniform grid.

    Values are renormalized to unit trapezoid mass at construction and the
    backing array is frozen, so instances are immutable and safe to share.
    """

    lo: float
    hi: float
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("grid values must be a one-dimensional array")
        if values.size < MIN_CELLS + 1:
            raise ValueError(f"grid needs at least {MIN_CELLS} cells, got {values.size - 1}")
        if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.lo < self.hi):
            raise ValueError("grid bounds must be finite with lo < hi")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid values must be finite")
        if np.any(values < 0.0):
            raise ValueError("grid values must be nonnegative")
        step = (self.hi - self.lo) / (values.size - 1)
        mass = float(np.trapezoid(values, dx=step))
        if mass <= 0.0:
            raise ValueError("grid carries no probability mass")
        if abs(mass - 1.0) > 1e-13:  # keep construction idempotent: round trips stay bit-exact
            values /= mass
        values.setflags(write=False)
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        """Number of uniform cells."""
        return self.values.size - 1

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / self.n

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.values.size)

    def mass(self) -> float:
        return float(np.trapezoid(self.values, dx=self.step))

    def evaluate(self, x):
        """Density at ``x`` by linear interpolation; zero outside the grid."""
        out = np.interp(x, self.nodes, self.values, left=0.0, right=0.0)
        return float(out) if np.isscalar(x) else out

    def _cdf_nodes(self) -> np.ndarray:
        return cumulative_trapezoid(self.values, dx=self.step, initial=0.0)

    def cdf(self, x):
        """Cumulative probability at ``x`` (0 below the grid, total mass above)."""
        c = self._cdf_nodes()
        out = np.interp(x, self.nodes, c, left=0.0, right=c[-1])
        return float(out) if np.isscalar(x) else out

    def tail_above(self, x) -> float:
        """``Prob{X > x}``, clamped to [0, 1]."""
        c = self._cdf_nodes()
        tail = c[-1] - np.interp(x, self.nodes, c, left=0.0, right=c[-1])
        return float(np.clip(tail / c[-1], 0.0, 1.0))

    def quantile(self, q):
        """Inverse cdf by piecewise-linear interpolation.

        Flat cdf stretches resolve to their leftmost point, so the result is
        deterministic and monotone in ``q``.
        """
        q_arr = np.atleast_1d(np.asarray(q, dtype=float))
        if np.any((q_arr <= 0.0) | (q_arr >= 1.0)):
            raise ValueError("quantile orders must lie strictly inside (0, 1)")
        c = self._cdf_nodes()
        target = q_arr * c[-1]
        i = np.clip(np.searchsorted(c, target, side="left"), 1, c.size - 1)
        c0, c1 = c[i - 1], c[i]
        span = c1 - c0
        frac = np.where(span > 0.0, (target - c0) / np.where(span > 0.0, span, 1.0), 0.0)
        out = self.lo + self.step * (i - 1 + frac)
        return float(out[0]) if np.isscalar(q) else out

    def mean(self) -> float:
        return float(np.trapezoid(self.nodes * self.values, dx=self.step))

    def variance(self) -> float:
        mu = self.mean()
        d = self.nodes - mu
        return float(np.trapezoid(d * d * self.values, dx=self.step))

    def to_json_obj(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "n": self.n, "values": self.values.tolist()}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "GridPdf":
        values = np.asarray(obj["values"], dtype=float)
        if values.size != int(obj["n"]) + 1:
            raise ValueError("grid node count does not match declared cell count")
        return cls(float(obj["lo"]), float(obj["hi"]), values)

    def write_csv(self, fileobj: io.TextIOBase) -> None:
        writer = csv.writer(fileobj, lineterminator="\n")
        writer.writerow(["node", "density"])
        for x, v in zip(self.nodes, self.values):
            writer.writerow([repr(float(x)), repr(float(v))])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            self.write_csv(fh)

    @classmethod
    def from_csv(cls, path) -> "GridPdf":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["node", "density"]:
            raise ValueError("grid csv must start with a 'node,density' header")
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
        return cls(data[0, 0], data[-1, 0], data[:, 1])


def from_distribution(dist, lo: float, hi: float, n: int) -> tuple[GridPdf, float]:
    """Sample a parametric density onto a uniform grid over ``[lo, hi]``.

    Returns the grid together with the probability mass of the distribution
    that falls outside the window, so truncation is never silent.
    """
    nodes = np.linspace(lo, hi, n + 1)
    grid = GridPdf(lo, hi, dist.pdf(nodes))
    lost = float(dist.cdf(lo) + (1.0 - dist.cdf(hi)))
    return grid, lost


def to_alpha_space(fa: GridPdf) -> GridPdf:
    """Map a density on ``a > 0`` into log coordinates.

    The change of variables ``f_alpha(t) = f_a(e^t) e^t`` is applied exactly
    at the grid nodes; the mapped samples are then resampled onto a uniform
    grid over ``[ln lo, ln hi]``.  Raises :class:`MassLossError` if the
    resampling loses more than ``MASS_TOL`` of mass.
    """
    if fa.lo <= 0.0:
        raise ValueError("change of variables requires support strictly inside a > 0")
    # evaluate the grid's piecewise-linear density through the exact pointwise
    # map: the continuum mass of the interpolant is then preserved exactly
    t = np.linspace(np.log(fa.lo), np.log(fa.hi), fa.values.size)
    a = np.exp(t)
    g = fa.evaluate(a) * a
    mass = float(np.trapezoid(g, dx=(t[-1] - t[0]) / fa.n))
    if abs(mass - 1.0) > MASS_TOL:
        raise MassLossError(
            f"log-space resampling lost {abs(mass - 1.0):.3e} of probability mass; "
            "refine the input grid"
        )
    return GridPdf(t[0], t[-1], g)


def to_a_space(falpha: GridPdf) -> GridPdf:
    """Inverse of :func:`to_alpha_space`: map a log-space density back to ``a``.

    ``f_a(x) = f_alpha(ln x) / x`` applied exactly at the mapped nodes, then
    resampled onto a uniform grid over ``[e^lo, e^hi]``.
    """
    if falpha.lo < -700.0 or falpha.hi > 700.0:
        raise ValueError("log-space grid too wide to exponentiate; use x_space_density for windows")
    a = np.linspace(np.exp(falpha.lo), np.exp(falpha.hi), falpha.values.size)
    h = falpha.evaluate(np.log(a)) / a
    mass = float(np.trapezoid(h, dx=(a[-1] - a[0]) / falpha.n))
    if abs(mass - 1.0) > MASS_TOL:
        raise MassLossError(
            f"linear-space resampling lost {abs(mass - 1.0):.3e} of probability mass; "
            "refine the input grid"
        )
    return GridPdf(a[0], a[-1], h)


def grid_quantile(f: GridPdf, q: float) -> float:
    """Inverse cdf of a grid density; see :meth:`GridPdf.quantile`."""
    return f.quantile(q)


def alpha_space_pdf(dist, alpha):
    """Pointwise change of variables of a distribution's density into log space.

    ``f_alpha(t) = f_a(e^t) e^t`` for any distribution supported on ``a > 0``.
    """
    a = np.exp(np.asarray(alpha, dtype=float))
    out = dist.pdf(a) * a
    return float(out) if np.isscalar(alpha) else out


def x_space_density(fzeta: GridPdf, x_lo: float, x_hi: float, n: int):
    """Evaluate the state-space density on a log-spaced window.

    ``f_x(x) = f_zeta(ln x) / x`` at ``n + 1`` log-spaced nodes.  The result is
    deliberately not renormalized: the window usually covers only part of the
    mass.  Returns ``(x_nodes, density)``.
    """
    if not (0.0 < x_lo < x_hi):
        raise ValueError("window must satisfy 0 < x_lo < x_hi")
    t = np.linspace(np.log(x_lo), np.log(x_hi), n + 1)
    x = np.exp(t)
    return x, fzeta.evaluate(t) / x
