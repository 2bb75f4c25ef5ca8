# %%
# A gain with no finite moments that still dies out
# --------------------------------------------------
#
# The half-Cauchy gain (|Cauchy| with scale gamma) has an infinite mean, yet
# its logarithm follows the light-tailed hyperbolic-secant density.  For
# gamma < 1 the log-gain mean ln(gamma) is negative, so the median of the
# state decays like gamma^K and the probability of sitting above the start
# decays exponentially, all while E[x_K] = infinity for every K.
#
# Run with:  python demos/04_heavy_tailed_gain.py

from pathlib import Path

import numpy as np

import stochgain as sg

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

gamma = 0.75
heavy = sg.HalfCauchyGain(gamma, label="heavy")

v = sg.classify(heavy)
print(f"median={v.median.value}, mean={v.mean.value} (moments infinite), "
      f"log-gain mean = {heavy.alpha_stats().mu_alpha:+.4f}")

# %%
# The log-space density is a shifted sech curve; dump it together with the
# natural-coordinate density for plotting on log axes.

alphas = np.linspace(np.log(gamma) - 12, np.log(gamma) + 12, 2001)
with open(OUT / "heavy_log_density.csv", "w") as fh:
    fh.write("alpha,density\n")
    for a, f in zip(alphas, heavy.alpha_pdf(alphas)):
        fh.write(f"{a!r},{f!r}\n")
print(f"wrote {OUT / 'heavy_log_density.csv'}")

# %%
# Evolve the log-state density by repeated convolution and check the median
# power law.

falpha = sg.default_alpha_grid(heavy, 50)
trace = sg.evolve_grid(falpha, 50, stride=1, keep_pdfs=False)
trace.to_csv(OUT / "heavy_evolution.csv")
worst = np.max(np.abs(trace.medians_x - gamma ** trace.K_values)
               / gamma ** trace.K_values)
print(f"median(x_K) tracks gamma^K with worst relative error {worst:.2e}")

# %%
# The make-a-profit probability P(x_K > 1) against the closed-form
# exponential bound.

lam, c = sg.sech_chernoff_closed_form(gamma)
print(f"closed-form exponent c = {c:.6f} at lambda* = {lam:.6f}")
with open(OUT / "heavy_tail_vs_bound.csv", "w") as fh:
    fh.write("K,convolution_tail,chernoff\n")
    for k, tail in zip(trace.K_values, trace.tail_at_one):
        fh.write(f"{int(k)},{tail!r},{np.exp(-c * k)!r}\n")
print(f"wrote {OUT / 'heavy_tail_vs_bound.csv'}")

# %%
# 500 sample trajectories: the sample median hugs K ln(gamma) although
# individual paths wander over hundreds of orders of magnitude.

ens = sg.simulate(heavy, n_paths=500, k_max=100, seed=271828)
ks = np.arange(0, 101)
sample_median_zeta = np.median(ens.log_paths, axis=0)
with open(OUT / "heavy_paths_summary.csv", "w") as fh:
    fh.write("K,sample_median_zeta,theory_median_zeta\n")
    for k in ks:
        fh.write(f"{k},{sample_median_zeta[k]!r},{(k * np.log(gamma))!r}\n")
spread = ens.log_paths[:, 100].max() - ens.log_paths[:, 100].min()
print(f"log-state spread across paths at K=100: {spread:.0f} nats")

# %%
# Optional picture.

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for i in range(0, 500, 5):
        axes[0].plot(ks, ens.log_paths[i], color="0.85", lw=0.3)
    axes[0].plot(ks, sample_median_zeta, "b", lw=1.5, label="sample median")
    axes[0].plot(ks, ks * np.log(gamma), "c--", lw=1.5, label="K ln(gamma)")
    axes[0].set_xlabel("K")
    axes[0].set_ylabel("log state")
    axes[0].legend(fontsize=8)
    axes[1].semilogy(trace.K_values, trace.tail_at_one, "m", label="convolution tail")
    axes[1].semilogy(trace.K_values, np.exp(-c * trace.K_values), "r",
                     label="exponential bound")
    axes[1].set_xlabel("K")
    axes[1].set_ylabel("P(x_K > 1)")
    axes[1].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(OUT / "heavy_tailed_gain.png", dpi=150)
    print(f"wrote {OUT / 'heavy_tailed_gain.png'}")
