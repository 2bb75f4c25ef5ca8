# %%
# Three notions of stability for one noisy feedback loop
# ------------------------------------------------------
#
# The loop x_{k+1} = a_k x_k multiplies its state by an i.i.d. random gain at
# every step.  Whether the state "converges to zero" depends on which summary
# you track: the median goes to zero iff E[ln a] < 0, the mean iff E[a] < 1,
# and the variance iff E[a]^2 + Var(a) < 1.  The three conditions are nested,
# and the gap between them is where the interesting behaviour lives.
#
# Run with:  python demos/01_stability_regions.py

from pathlib import Path

import numpy as np

import stochgain as sg

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# %%
# Classify a few gains.  The reference gain has mean slightly above one, so
# its mean diverges, yet its median decays: most trajectories die while the
# ensemble average explodes.

cases = {
    "comfortably stable": sg.LogNormalGain.from_a_moments(0.85, 0.20),
    "mean stable only": sg.LogNormalGain.from_a_moments(0.97, 0.30),
    "median stable, mean unstable": sg.LogNormalGain.from_a_moments(1.0283, 0.4389),
    "unstable": sg.LogNormalGain.from_a_moments(1.15, 0.45),
}

for name, dist in cases.items():
    v = sg.classify(dist)
    print(f"{name:32s} median={v.median.value:9s} mean={v.mean.value:9s} "
          f"variance={v.variance.value}")

# %%
# Trace the region boundaries in the (gain mean, gain std) plane.  The mean
# and variance boundaries hold for any gain distribution; the median boundary
# drawn here is the lognormal one.

sigmas = np.linspace(0.0, 1.4, 141)
curves = sg.region_boundaries(np.linspace(0.2, 2.5, 24), sigmas)

with open(OUT / "stability_regions.csv", "w") as fh:
    fh.write("criterion,point_index,x,y\n")
    for crit in sorted(curves):
        for i, (x, y) in enumerate(curves[crit]):
            fh.write(f"{crit},{i},{x!r},{y!r}\n")
print(f"\nwrote {OUT / 'stability_regions.csv'}")

# %%
# The median boundary bends to the right: a gain with mean above one can
# still be median stable if its spread is large enough.

ref = cases["median stable, mean unstable"]
row = curves["median"][np.searchsorted(sigmas, 0.4389)]
print(f"median boundary at std 0.4389 sits at mean {row[0]:.4f}; "
      f"the reference gain mean 1.0283 lies inside")

# %%
# Optional picture.

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, ax = plt.subplots(figsize=(6, 4.5))
    colors = {"median": "tab:green", "mean": "tab:blue", "variance": "tab:red"}
    for crit, pts in curves.items():
        ax.plot(pts[:, 0], pts[:, 1], color=colors[crit], label=f"{crit} boundary")
    for name, dist in cases.items():
        m = dist.a_moments()
        ax.plot(m.mu_a, np.sqrt(m.var_a), "ko", ms=4)
    ax.set_xlabel("gain mean")
    ax.set_ylabel("gain standard deviation")
    ax.set_xlim(0.2, 2.0)
    ax.legend(loc="upper right", fontsize=8)
    ax.set_title("stable to the left of each boundary")
    fig.tight_layout()
    fig.savefig(OUT / "stability_regions.png", dpi=150)
    print(f"wrote {OUT / 'stability_regions.png'}")
