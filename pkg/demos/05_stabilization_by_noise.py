# %%
# Stabilizing an unstable plant with pure noise
# ---------------------------------------------
#
# Close the first order plant gamma/(z - tau) with a stochastic feedback gain
# delta_k ~ N(mu, sigma^2).  The closed-loop state magnitude evolves with the
# random gain a_k = |tau + gamma delta_k|, so the multiplicative-loop theory
# applies directly.  A zero-mean noise of the right variance can median-
# stabilize a plant whose pole sits outside the unit circle; no noise can
# rescue the mean or the variance.
#
# Run with:  python demos/05_stabilization_by_noise.py

from pathlib import Path

import numpy as np

import stochgain as sg

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# %%
# An unstable pole at 1.05, no feedback: everything diverges.

bare = sg.PlantSpec(1.05, 1.0, sg.NormalDelta(0.0, 0.0))
v = sg.stabilization_verdict(bare)
print(f"no feedback:        median={v.median.value}, mean={v.mean.value}")

# %%
# Sweep the feedback standard deviation: a window of variances flips the
# median verdict while mean and variance stay unstable.

print("\nsigma   log-gain-mean   median verdict")
stable_window = []
for sigma in np.linspace(0.2, 2.0, 10):
    plant = sg.PlantSpec(1.05, 1.0, sg.NormalDelta(0.0, float(sigma)))
    v = sg.stabilization_verdict(plant)
    print(f"{sigma:5.2f}   {-v.margin_median:+.4f}        {v.median.value}")
    if v.median is sg.Stability.STABLE:
        stable_window.append(sigma)
print(f"\nmedian-stabilizing window within the sweep: "
      f"[{min(stable_window):.2f}, {max(stable_window):.2f}]")

# %%
# Full stability boundaries over the (nominal gain, feedback std) plane.
# The nominal axis is |tau + gamma mu|, so the picture covers every plant
# and every feedback mean at once.

curves = sg.stabilization_region(np.linspace(0.05, 1.3, 51),
                                 np.linspace(0.0, 1.5, 16), n_grid=8192)
with open(OUT / "stabilization_regions.csv", "w") as fh:
    fh.write("criterion,point_index,x,y\n")
    for crit in sorted(curves):
        for i, (x, y) in enumerate(curves[crit]):
            fh.write(f"{crit},{i},{x!r},{y!r}\n")
print(f"wrote {OUT / 'stabilization_regions.csv'}")

median_pts = curves["median"]
print(f"largest median-stabilizable nominal gain in the sweep: "
      f"{median_pts[:, 0].max():.3f}")

# %%
# A deterministic time-varying gain tells the same story: what matters is the
# average of ln|gain|, i.e. the geometric mean, not the arithmetic one.

analysis = sg.periodic_gain_analysis([0.6, 1.0, 1.4])
print(f"\nperiodic gains [0.6, 1.0, 1.4]: arithmetic mean 1.0, geometric mean "
      f"{analysis.geo_mean:.4f} -> {'decays' if analysis.stable else 'grows'}")

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
        order = np.argsort(pts[:, 1])
        ax.plot(pts[order, 0], pts[order, 1], color=colors[crit],
                label=f"{crit} boundary")
    ax.axvline(1.0, color="0.7", lw=0.8, ls=":")
    ax.set_xlabel("|tau + gamma mu|  (nominal closed-loop gain)")
    ax.set_ylabel("feedback standard deviation")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(OUT / "stabilization_regions.png", dpi=150)
    print(f"wrote {OUT / 'stabilization_regions.png'}")
