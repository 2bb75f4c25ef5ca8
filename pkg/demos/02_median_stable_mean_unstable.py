# %%
# When almost every path dies but the mean explodes
# --------------------------------------------------
#
# The reference gain (mean 1.0283, std 0.4389) is median stable and mean
# unstable.  Simulated sample paths collapse towards zero while the
# theoretical mean grows like 1.0283^K; the sample mean first follows the
# theory, then falls away as ever fewer paths remain near the growing mean.
#
# Run with:  python demos/02_median_stable_mean_unstable.py

from pathlib import Path

import numpy as np

import stochgain as sg

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

dist = sg.LogNormalGain.from_a_moments(1.0283, 0.4389, label="reference")
stats = dist.alpha_stats()
print(f"log-gain mean {stats.mu_alpha:+.4f} (median stable), "
      f"gain mean {dist.a_moments().mu_a:.4f} (mean unstable)")

# %%
# Closed-form evolution: median, mean, variance and the mass above one at
# every horizon.

K = list(range(1, 301))
trace = sg.evolve_lognormal(stats.mu_alpha, np.sqrt(stats.var_alpha), K)
trace.to_csv(OUT / "reference_evolution.csv")
print(f"wrote {OUT / 'reference_evolution.csv'}")
i = K.index(300)
print(f"at K=300: median {trace.medians_x[i]:.3e}, mean {trace.means_x[i]:.3e}, "
      f"P(x > 1) = {trace.tail_at_one[i]:.4f}")

# %%
# 200 sample paths.  Everything happens in log space, so the paths that climb
# towards the mean do not overflow.

ens = sg.simulate(dist, n_paths=200, k_max=300, seed=314159)
sample_median = np.array([sg.sample_stats(ens, k).median for k in K])
sample_mean = np.array([sg.sample_stats(ens, k).mean for k in K])

with open(OUT / "reference_paths_summary.csv", "w") as fh:
    fh.write("K,sample_median,sample_mean,theory_median,theory_mean\n")
    for j, k in enumerate(K):
        fh.write(f"{k},{sample_median[j]!r},{sample_mean[j]!r},"
                 f"{trace.medians_x[j]!r},{trace.means_x[j]!r}\n")
print(f"wrote {OUT / 'reference_paths_summary.csv'}")

shortfall = sample_mean[-1] / trace.means_x[-1]
print(f"sample mean at K=300 is {shortfall:.2e} of the theoretical mean: "
      "the estimate has collapsed")

# %%
# Why: the probability of a path exceeding the mean threshold shrinks to
# 2e-4 by K=300, so 200 paths almost surely contain none of the rare
# excursions that carry the mean.

p_above_mean = sg.lognormal_tail(stats.mu_alpha, np.sqrt(stats.var_alpha), 300,
                                 x_bnd=dist.a_moments().mu_a ** 300)
print(f"P(x_300 > mean_300) = {p_above_mean:.2e}")

# %%
# Snapshots of the state density (log-spaced window) show the mass piling up
# near zero while a long right tail feeds the mean.

snap = sg.evolve_lognormal(stats.mu_alpha, np.sqrt(stats.var_alpha),
                           [1, 2, 3, 5, 10, 15, 30], keep_pdfs=True)
for k, pdf in zip(snap.K_values, snap.zeta_pdfs):
    x, fx = sg.x_space_density(pdf, 1e-3, 6.0, 512)
    with open(OUT / f"state_density_K{k}.csv", "w") as fh:
        fh.write("node,density\n")
        for xi, fi in zip(x, fx):
            fh.write(f"{xi!r},{fi!r}\n")
print(f"wrote state density snapshots for K = {[int(k) for k in snap.K_values]}")

# %%
# Optional picture of paths against the theoretical lines.

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ks = np.arange(0, 301)
    for i in range(0, 200, 4):
        ax.semilogy(ks, np.exp(ens.log_paths[i]), color="0.8", lw=0.4, zorder=1)
    ax.semilogy(K, trace.medians_x, "c", lw=2, label="theoretical median")
    ax.semilogy(K, trace.means_x, "m", lw=2, label="theoretical mean")
    ax.semilogy(K, sample_median, "b--", lw=1.5, label="sample median")
    ax.semilogy(K, sample_mean, "r--", lw=1.5, label="sample mean")
    ax.set_ylim(1e-12, 1e6)
    ax.set_xlabel("K")
    ax.set_ylabel("state")
    ax.legend(loc="lower left", fontsize=8)
    fig.tight_layout()
    fig.savefig(OUT / "median_vs_mean_paths.png", dpi=150)
    print(f"wrote {OUT / 'median_vs_mean_paths.png'}")
