# %%
# How fast does the mass above one disappear?
# -------------------------------------------
#
# For a median-stable loop the probability P(x_K > 1) of still being above
# the starting point decays with K.  Three curves quantify it: the exact erf
# tail (lognormal gains only), the distribution-free Cantelli bound with its
# 1/K decay, and the exponential Chernoff bound from the log-gain moment
# generating function.
#
# Run with:  python demos/03_concentration_bounds.py

from pathlib import Path

import numpy as np

import stochgain as sg

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

dist = sg.LogNormalGain.from_a_moments(1.0283, 0.4389, label="reference")

# %%
# Assemble the full report over K = 1..300.

report = sg.tail_report(dist, range(1, 301))
report.to_csv(OUT / "tail_bounds.csv")
print(f"wrote {OUT / 'tail_bounds.csv'}")
print(f"optimized exponent c = {report.chernoff_c:.6f} at lambda* = "
      f"{report.lambda_star:.6f}")

# %%
# The ordering is strict: the exact tail never exceeds either bound, Cantelli
# wins for small K, the exponential bound wins in the long run.

cross = np.argmax(report.chernoff < report.cantelli)
print(f"Chernoff bound overtakes Cantelli at K = {report.K_values[cross]}")
for k in (1, 30, 100, 300):
    i = k - 1
    print(f"K={k:3d}  exact={report.exact[i]:.3e}  cantelli={report.cantelli[i]:.3e}"
          f"  chernoff={report.chernoff[i]:.3e}")

# %%
# Convergence in probability: also the mass above any epsilon dies, even
# though the mean of the same distribution diverges.

stats = dist.alpha_stats()
trace = sg.evolve_lognormal(stats.mu_alpha, np.sqrt(stats.var_alpha),
                            list(range(10, 2001, 10)))
for eps in (1.0, 0.1, 0.01):
    tail = sg.convergence_in_probability_check(trace, eps)
    k_small = trace.K_values[np.argmax(tail < 1e-3)]
    print(f"P(x_K > {eps:4}) drops below 1e-3 at K = {k_small}")

# %%
# Optional picture.

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    ax.semilogy(report.K_values, report.exact, "b", label="exact tail")
    ax.semilogy(report.K_values, report.cantelli, "r", label="Cantelli bound")
    ax.semilogy(report.K_values, report.chernoff, "m", label="Chernoff bound")
    ax.set_xlabel("K")
    ax.set_ylabel("P(x_K > 1)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(OUT / "tail_bounds.png", dpi=150)
    print(f"wrote {OUT / 'tail_bounds.png'}")
