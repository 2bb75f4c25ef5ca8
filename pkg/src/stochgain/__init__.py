"""Stability analysis toolkit for the scalar multiplicative feedback loop.

The loop ``x_{k+1} = a_k x_k`` with i.i.d. random gains ``a_k`` can be stable
in the median while its mean and variance diverge.  This package classifies
the three stability notions, evolves the state distribution over time, bounds
its tail, and simulates sample-path ensembles, all in the log coordinates
where products of gains become sums.
"""

__version__ = "0.1.0"

from .distributions import (
    AlphaStats,
    AMoments,
    Distribution,
    GridGain,
    HalfCauchyGain,
    LogNormalGain,
    NormalDelta,
    a_moments_from_alpha,
    alpha_moments_from_a,
    distribution_from_json,
)
from .grids import (
    GridPdf,
    MassLossError,
    alpha_space_pdf,
    from_distribution,
    grid_quantile,
    to_a_space,
    to_alpha_space,
    x_space_density,
)
from .stability import (
    PeriodicGainAnalysis,
    PlantSpec,
    Stability,
    StabilityVerdict,
    asymptotic_log_average,
    classify,
    folded_gain_distribution,
    median_limit_zero_mean,
    periodic_gain_analysis,
    region_boundaries,
    stabilization_region,
    stabilization_verdict,
)
from .evolution import (
    EvolutionTrace,
    default_alpha_grid,
    evolve_grid,
    evolve_lognormal,
    goodman_variance,
)
from .montecarlo import (
    PathEnsemble,
    SampleStats,
    TailCurve,
    path_uniforms,
    sample_stats,
    simulate,
    tail_frequency_curve,
)
from .bounds import (
    ChernoffBound,
    TailReport,
    cantelli_bound,
    chernoff_bound,
    convergence_in_probability_check,
    lognormal_tail,
    sech_chernoff_closed_form,
    tail_report,
)

__all__ = [
    "__version__",
    "AlphaStats", "AMoments", "Distribution", "GridGain", "HalfCauchyGain",
    "LogNormalGain", "NormalDelta", "a_moments_from_alpha", "alpha_moments_from_a",
    "distribution_from_json",
    "GridPdf", "MassLossError", "alpha_space_pdf", "from_distribution",
    "grid_quantile", "to_a_space", "to_alpha_space", "x_space_density",
    "PeriodicGainAnalysis", "PlantSpec", "Stability", "StabilityVerdict",
    "asymptotic_log_average", "classify", "folded_gain_distribution",
    "median_limit_zero_mean", "periodic_gain_analysis", "region_boundaries",
    "stabilization_region", "stabilization_verdict",
    "EvolutionTrace", "default_alpha_grid", "evolve_grid", "evolve_lognormal",
    "goodman_variance",
    "PathEnsemble", "SampleStats", "TailCurve", "path_uniforms", "sample_stats",
    "simulate", "tail_frequency_curve",
    "ChernoffBound", "TailReport", "cantelli_bound", "chernoff_bound",
    "convergence_in_probability_check", "lognormal_tail",
    "sech_chernoff_closed_form", "tail_report",
]
