"""Acceptance suite: every criterion runs at its stated tolerance and prints
one pass/fail line (run with ``pytest tests/test_acceptance.py -v -s``)."""
import json

import numpy as np
import pytest

import stochgain as sg
from stochgain.cli import main as cli_main

from helpers import (
    HEAVY_GAMMA,
    REF_MU_A,
    REF_MU_ALPHA,
    REF_SIGMA_A,
    REF_VAR_ALPHA,
    skewed_mixture,
)

REF_SIGMA_ALPHA = float(np.sqrt(REF_VAR_ALPHA))


def _report(num, name):
    print(f"ACCEPTANCE {num:02d} {name}: PASS")


@pytest.fixture(scope="module")
def ref_lognormal():
    return sg.LogNormalGain.from_a_moments(REF_MU_A, REF_SIGMA_A, label="reference")


@pytest.fixture(scope="module")
def sech_evolution():
    heavy = sg.HalfCauchyGain(HEAVY_GAMMA)
    falpha = sg.default_alpha_grid(heavy, 50)
    return sg.evolve_grid(falpha, 50, stride=1, keep_pdfs=True)


def test_criterion_01_tail_probability_at_the_mean_threshold():
    """With gain mean 1.0283 and std 0.4389 the mass above the K = 300 mean
    is 0.0002 within ten percent, in milliseconds."""
    tail = sg.lognormal_tail(REF_MU_ALPHA, REF_SIGMA_ALPHA, 300, x_bnd=REF_MU_A ** 300)
    assert abs(tail - 2e-4) <= 0.10 * 2e-4
    _report(1, "tail probability at the mean threshold")


def test_criterion_02_moment_mapping_round_trip():
    """Ten thousand random gain means/stds survive the log-space moment
    mapping round trip to 1e-10 relative error."""
    rng = np.random.default_rng(20240811)
    mu = np.exp(rng.uniform(np.log(0.05), np.log(20.0), size=10_000))
    sd = np.exp(rng.uniform(np.log(0.005), np.log(8.0), size=10_000))
    worst = 0.0
    for m, s in zip(mu, sd):
        ma, va = sg.alpha_moments_from_a(m, s)
        m2, v2 = sg.a_moments_from_alpha(ma, va)
        worst = max(worst, abs(m2 - m) / m, abs(v2 - s * s) / (s * s))
    assert worst <= 1e-10
    _report(2, f"moment mapping round trip (worst rel err {worst:.2e})")


def test_criterion_03_product_variance_against_monte_carlo():
    """For 100 random lognormal gains and K <= 20 the exact product variance
    matches a million-path sample variance within three relative standard
    errors in at least 95 cases."""
    rng = np.random.default_rng(5150)
    n = 1_000_000
    hits = 0
    for i in range(100):
        mu = rng.uniform(-0.30, 0.10)
        sigma = rng.uniform(0.05, 0.30)
        k = int(rng.integers(1, 21))
        dist = sg.LogNormalGain(mu, sigma)
        moments = dist.a_moments()
        target = sg.goodman_variance(moments.mu_a, moments.var_a, k)
        ens = sg.simulate(dist, n, k, seed=1000 + i)
        x = np.exp(ens.log_paths[:, k])
        sample_var = float(np.var(x, ddof=1))
        # standard error of the sample variance from the exact fourth central
        # moment of the lognormal state
        m, v = k * mu, k * sigma * sigma
        raw = [np.exp(p * m + p * p * v / 2.0) for p in (1, 2, 3, 4)]
        mu4 = raw[3] - 4 * raw[2] * raw[0] + 6 * raw[1] * raw[0] ** 2 - 3 * raw[0] ** 4
        se = np.sqrt((mu4 - target ** 2) / n)
        if abs(sample_var - target) <= 3.0 * se:
            hits += 1
    assert hits >= 95
    _report(3, f"product variance vs Monte Carlo ({hits}/100 within 3 SE)")


def test_criterion_04_heavy_tail_median_power_law(sech_evolution):
    """Grid evolution of the log half-Cauchy gain keeps the state median
    within 2% of gamma^K for every K up to 50."""
    trace = sech_evolution
    target = HEAVY_GAMMA ** trace.K_values.astype(float)
    rel = np.abs(trace.medians_x - target) / target
    assert trace.K_values[-1] == 50
    assert np.max(rel) <= 0.02
    _report(4, f"heavy-tail median power law (worst rel err {np.max(rel):.2e})")


def test_criterion_05_chernoff_closed_form_and_domination(sech_evolution):
    """The closed-form exponential-bound constants agree with the numeric
    optimizer to 1e-8, and the bound dominates the convolution tail for all
    K <= 50."""
    lam, c = sg.sech_chernoff_closed_form(HEAVY_GAMMA)
    cb = sg.chernoff_bound(sg.HalfCauchyGain(HEAVY_GAMMA), K=sech_evolution.K_values)
    assert abs(cb.lambda_star - lam) <= 1e-8
    assert abs(cb.c - c) <= 1e-8
    tails = sech_evolution.tail_at_one
    bound = np.exp(-c * sech_evolution.K_values.astype(float))
    assert np.all(tails <= bound)
    # the exponent is tight: the bound overshoots by a bounded factor only
    window = (sech_evolution.K_values >= 10)
    ratio = bound[window] / tails[window]
    assert np.all((ratio >= 1.0) & (ratio <= 50.0))
    _report(5, f"exponential bound constants and domination (ratio <= {ratio.max():.1f})")


def test_criterion_06_bound_ordering_reference_gain(ref_lognormal):
    """Exact tail <= min(Cantelli, Chernoff) for every K in [1, 300]."""
    K = np.arange(1, 301)
    exact = sg.lognormal_tail(REF_MU_ALPHA, REF_SIGMA_ALPHA, K, 1.0)
    cantelli = sg.cantelli_bound(ref_lognormal.alpha_stats(), K)
    chernoff = sg.chernoff_bound(ref_lognormal, K=K).bound
    assert np.all(exact <= np.minimum(cantelli, chernoff))
    _report(6, "exact tail below both concentration bounds over K = 1..300")


def test_criterion_07_zero_mean_median_offset():
    """A skewed zero-log-mean gain drives the log-state median to
    -third_moment / (6 variance); the grid evolution hits the limit within
    5% by K = 200."""
    pdf, mean, var, third = skewed_mixture(0.3, 0.7, -0.3, 0.5)
    assert abs(mean) < 1e-15
    offset = -third / (6.0 * var)
    k_max = 200
    step = np.sqrt(var * k_max) / 4096
    half = 19.0
    n = int(np.ceil(2 * half / step))
    nodes = np.linspace(-half, -half + n * step, n + 1)
    grid = sg.GridPdf(nodes[0], nodes[-1], pdf(nodes))
    trace = sg.evolve_grid(grid, k_max, stride=k_max)
    median_zeta = np.log(trace.medians_x[-1])
    rel = abs(median_zeta - offset) / abs(offset)
    assert rel <= 0.05
    # the state median limit follows by exponentiating
    limit = sg.median_limit_zero_mean(sg.AlphaStats(0.0, var, third))
    assert trace.medians_x[-1] == pytest.approx(limit, rel=0.05 * abs(offset) + 1e-6)
    _report(7, f"zero-mean median offset (rel err {rel:.2%} at K = {k_max})")


def test_criterion_08_stochastic_stabilization_of_an_unstable_plant():
    """For the unstable pole 1.05 some zero-mean normal feedback variance
    median-stabilizes the loop, while no feedback whatsoever can mean- or
    variance-stabilize a nominally unstable loop."""
    tau, gamma = 1.05, 1.0
    found = None
    for sigma in np.linspace(0.1, 3.0, 30):
        plant = sg.PlantSpec(tau, gamma, sg.NormalDelta(0.0, float(sigma)))
        if sg.stabilization_verdict(plant).median is sg.Stability.STABLE:
            found = float(sigma)
            break
    assert found is not None

    rng = np.random.default_rng(88)
    checked = 0
    while checked < 40:
        tau_r = rng.uniform(-2.5, 2.5)
        gamma_r = rng.uniform(-2.0, 2.0)
        mu_d = rng.uniform(-1.0, 1.0)
        if gamma_r == 0.0 or abs(tau_r + gamma_r * mu_d) <= 1.0 + 1e-9:
            continue
        sigma_d = float(rng.uniform(0.0, 2.5))
        v = sg.stabilization_verdict(
            sg.PlantSpec(tau_r, gamma_r, sg.NormalDelta(mu_d, sigma_d)))
        assert v.mean is sg.Stability.UNSTABLE
        assert v.variance is sg.Stability.UNSTABLE
        checked += 1
    _report(8, f"stochastic stabilization (median stable at sigma = {found:.2f})")


def test_criterion_09_stability_nesting_never_violated():
    """Across ten thousand random lognormal gains, variance stability implies
    mean stability implies median stability."""
    rng = np.random.default_rng(777)
    rank = {sg.Stability.STABLE: 2, sg.Stability.MARGINAL: 1, sg.Stability.UNSTABLE: 0}
    for _ in range(10_000):
        dist = sg.LogNormalGain(rng.uniform(-1.5, 0.8), rng.uniform(0.01, 2.0))
        v = sg.classify(dist)
        assert rank[v.variance] <= rank[v.mean] <= rank[v.median]
    _report(9, "stability nesting over 10000 random gains")


def _run_twice(tmp_path, command, scenario):
    scen = tmp_path / f"{command}.json"
    scen.write_text(json.dumps(scenario))
    out_a = tmp_path / f"{command}_a"
    out_b = tmp_path / f"{command}_b"
    assert cli_main([command, "--scenario", str(scen), "--out", str(out_a)]) in (0, 1)
    assert cli_main([command, "--scenario", str(scen), "--out", str(out_b)]) in (0, 1)
    files_a = {p.name: p.read_bytes() for p in sorted(out_a.iterdir())}
    files_b = {p.name: p.read_bytes() for p in sorted(out_b.iterdir())}
    assert files_a.keys() == files_b.keys()
    for name in files_a:
        assert files_a[name] == files_b[name], f"{command}/{name} differs between runs"
    return len(files_a)


def test_criterion_10_cli_reproducibility(tmp_path, ref_lognormal):
    """Every data-producing command yields byte-identical files across two
    runs with the same scenario and seed."""
    ref = ref_lognormal.to_json()
    heavy = sg.HalfCauchyGain(HEAVY_GAMMA).to_json()
    scenarios = {
        "classify": {"spec": ref},
        "evolve": {"spec": heavy, "K_max": 30, "stride": 1,
                   "dump_densities": [1, 10, 30],
                   "x_window": {"lo": 1e-4, "hi": 2.0, "n": 256}},
        "simulate": {"spec": ref, "n_paths": 200, "K_max": 300, "seed": 314159},
        "bounds": {"spec": ref, "K_max": 300},
        "regions": {"mu_a": {"lo": 0.2, "hi": 2.2, "n": 41},
                    "sigma_a": {"lo": 0.0, "hi": 1.4, "n": 29}},
        "stabilize": {"nominal": {"lo": 0.05, "hi": 1.3, "n": 26},
                      "sigma": {"lo": 0.0, "hi": 1.2, "n": 7}, "n_grid": 4096},
        "periodic": {"gains": [0.6, 1.0, 1.4]},
    }
    total = 0
    for command, scenario in scenarios.items():
        total += _run_twice(tmp_path, command, scenario)
    _report(10, f"CLI reproducibility ({len(scenarios)} commands, {total} files)")
