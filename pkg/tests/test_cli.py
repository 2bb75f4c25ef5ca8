import json
import subprocess
import sys

import numpy as np
import pytest

import stochgain as sg
from stochgain.cli import main

from helpers import HEAVY_GAMMA, REF_MU_A, REF_SIGMA_A


def write_scenario(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def ref_spec_obj():
    dist = sg.LogNormalGain.from_a_moments(REF_MU_A, REF_SIGMA_A, label="reference")
    return dist.to_json()


def read_tree(root):
    return {p.name: p.read_bytes() for p in sorted(root.iterdir()) if p.is_file()}


class TestClassify:
    def test_median_stable_exit_zero(self, tmp_path, capsys):
        scen = write_scenario(tmp_path, "s.json", {"spec": ref_spec_obj()})
        assert main(["classify", "--scenario", scen]) == 0
        out = capsys.readouterr().out
        assert "median: stable" in out
        assert "mean: unstable" in out
        assert "variance: unstable" in out

    def test_mean_criterion_exit_one(self, tmp_path):
        scen = write_scenario(tmp_path, "s.json",
                              {"spec": ref_spec_obj(), "criterion": "mean"})
        assert main(["classify", "--scenario", scen]) == 1

    def test_heavy_gain_above_one_median_unstable(self, tmp_path, capsys):
        spec = sg.HalfCauchyGain(1.25).to_json()
        scen = write_scenario(tmp_path, "s.json", {"spec": spec})
        assert main(["classify", "--scenario", scen]) == 1
        assert "median: unstable" in capsys.readouterr().out

    def test_deterministic_gain_all_stable(self, tmp_path):
        spec = sg.NormalDelta(0.9, 0.0).to_json()
        scen = write_scenario(tmp_path, "s.json", {"spec": spec, "criterion": "all"})
        assert main(["classify", "--scenario", scen]) == 0

    def test_writes_verdict_and_manifest(self, tmp_path):
        scen = write_scenario(tmp_path, "s.json", {"spec": ref_spec_obj()})
        out = tmp_path / "out"
        assert main(["classify", "--scenario", scen, "--out", str(out)]) == 0
        verdict = json.loads((out / "verdict.json").read_text())
        assert verdict["median"] == "stable"
        manifest = json.loads((out / "manifest.json").read_text())
        assert "verdict.json" in manifest["outputs"]

    def test_malformed_scenario_exit_two(self, tmp_path, capsys):
        scen = write_scenario(tmp_path, "s.json", {"nonsense": True})
        assert main(["classify", "--scenario", scen]) == 2
        assert "error" in capsys.readouterr().err

    def test_unknown_field_rejected(self, tmp_path):
        scen = write_scenario(tmp_path, "s.json", {"spec": ref_spec_obj(), "zzz": 1})
        assert main(["classify", "--scenario", scen]) == 2

    def test_unknown_spec_param_rejected(self, tmp_path):
        spec = {"kind": "lognormal", "params": {"mu_alpha": 0.0, "sigma_alpha": 1.0,
                                                "tilt": 3.0}}
        scen = write_scenario(tmp_path, "s.json", {"spec": spec})
        assert main(["classify", "--scenario", scen]) == 2

    def test_missing_file_exit_two(self):
        assert main(["classify", "--scenario", "/nonexistent/s.json"]) == 2


class TestEvolve:
    def test_single_step_emits_input_density(self, tmp_path):
        spec = sg.HalfCauchyGain(HEAVY_GAMMA)
        scen = write_scenario(tmp_path, "s.json",
                              {"spec": spec.to_json(), "K_max": 1, "dump_densities": [1]})
        out = tmp_path / "out"
        assert main(["evolve", "--scenario", scen, "--out", str(out)]) == 0
        dumped = sg.GridPdf.from_csv(out / "zeta_density_K1.csv")
        expected = sg.default_alpha_grid(spec, 1)
        assert dumped.lo == expected.lo
        assert np.allclose(dumped.values, expected.values, rtol=1e-12)

    def test_trace_columns(self, tmp_path):
        scen = write_scenario(tmp_path, "s.json", {"spec": ref_spec_obj(), "K_max": 5})
        out = tmp_path / "out"
        assert main(["evolve", "--scenario", scen, "--out", str(out)]) == 0
        lines = (out / "trace.csv").read_text().splitlines()
        assert lines[0] == "K,median_x,mean_x,var_x,tail_at_one"
        assert len(lines) == 6

    def test_x_window_dump(self, tmp_path):
        scen = write_scenario(tmp_path, "s.json",
                              {"spec": ref_spec_obj(), "K_max": 3, "dump_densities": [3],
                               "x_window": {"lo": 0.01, "hi": 4.0, "n": 32}})
        out = tmp_path / "out"
        assert main(["evolve", "--scenario", scen, "--out", str(out)]) == 0
        lines = (out / "x_density_K3.csv").read_text().splitlines()
        assert lines[0] == "node,density"
        assert len(lines) == 34

    def test_json_format(self, tmp_path):
        scen = write_scenario(tmp_path, "s.json", {"spec": ref_spec_obj(), "K_max": 4,
                                                   "format": "json"})
        out = tmp_path / "out"
        assert main(["evolve", "--scenario", scen, "--out", str(out)]) == 0
        trace = json.loads((out / "trace.json").read_text())
        assert trace["K"] == [1, 2, 3, 4]


class TestSimulate:
    def test_seed_required(self, tmp_path, capsys):
        scen = write_scenario(tmp_path, "s.json",
                              {"spec": ref_spec_obj(), "n_paths": 10, "K_max": 5})
        assert main(["simulate", "--scenario", scen]) == 2
        assert "seed" in capsys.readouterr().err

    def test_summary_written(self, tmp_path):
        scen = write_scenario(tmp_path, "s.json",
                              {"spec": ref_spec_obj(), "n_paths": 50, "K_max": 10,
                               "seed": 7})
        out = tmp_path / "out"
        assert main(["simulate", "--scenario", scen, "--out", str(out)]) == 0
        lines = (out / "summary.csv").read_text().splitlines()
        assert lines[0] == \
            "K,sample_median,sample_mean,sample_log_mean,tail_freq,wilson_lo,wilson_hi"
        assert len(lines) == 12
        assert not (out / "full_paths.csv").exists()

    def test_full_path_dump_behind_flag(self, tmp_path, capsys):
        scen = write_scenario(tmp_path, "s.json",
                              {"spec": ref_spec_obj(), "n_paths": 5, "K_max": 4,
                               "seed": 7, "dump_paths": True})
        out = tmp_path / "out"
        assert main(["simulate", "--scenario", scen, "--out", str(out)]) == 0
        assert "warning" in capsys.readouterr().err
        lines = (out / "full_paths.csv").read_text().splitlines()
        assert lines[0] == "path,zeta_0,zeta_1,zeta_2,zeta_3,zeta_4"
        assert len(lines) == 6
        ens = sg.simulate(sg.distribution_from_json(ref_spec_obj()), 5, 4, seed=7)
        row0 = [float(v) for v in lines[1].split(",")[1:]]
        assert np.array_equal(row0, ens.log_paths[0])


class TestBounds:
    def test_curves_and_constants(self, tmp_path):
        scen = write_scenario(tmp_path, "s.json", {"spec": ref_spec_obj(), "K_max": 20})
        out = tmp_path / "out"
        assert main(["bounds", "--scenario", scen, "--out", str(out)]) == 0
        lines = (out / "bounds.csv").read_text().splitlines()
        assert lines[0] == "K,exact,cantelli,chernoff"
        assert len(lines) == 21
        constants = json.loads((out / "chernoff.json").read_text())
        assert constants["c"] > 0


class TestRegions:
    def test_three_curves(self, tmp_path):
        scen = write_scenario(tmp_path, "s.json",
                              {"mu_a": {"lo": 0.2, "hi": 2.0, "n": 9},
                               "sigma_a": {"lo": 0.0, "hi": 1.2, "n": 7}})
        out = tmp_path / "out"
        assert main(["regions", "--scenario", scen, "--out", str(out)]) == 0
        lines = (out / "regions.csv").read_text().splitlines()
        assert lines[0] == "criterion,point_index,x,y"
        names = {line.split(",")[0] for line in lines[1:]}
        assert names == {"median", "mean", "variance"}


class TestStabilize:
    def test_plant_verdict(self, tmp_path, capsys):
        plant = {"tau": 1.05, "gamma_gain": 1.0,
                 "delta": sg.NormalDelta(0.0, 0.8).to_json()}
        scen = write_scenario(tmp_path, "s.json", {"plant": plant})
        assert main(["stabilize", "--scenario", scen]) == 0
        assert "median: stable" in capsys.readouterr().out

    def test_region_sweep(self, tmp_path):
        scen = write_scenario(tmp_path, "s.json",
                              {"nominal": {"lo": 0.1, "hi": 1.2, "n": 12},
                               "sigma": {"lo": 0.0, "hi": 0.8, "n": 3},
                               "n_grid": 2048})
        out = tmp_path / "out"
        assert main(["stabilize", "--scenario", scen, "--out", str(out)]) == 0
        lines = (out / "stabilize_regions.csv").read_text().splitlines()
        assert lines[0] == "criterion,point_index,x,y"

    def test_needs_exactly_one_mode(self, tmp_path):
        scen = write_scenario(tmp_path, "s.json", {})
        assert main(["stabilize", "--scenario", scen]) == 2


class TestPeriodic:
    def test_report(self, tmp_path, capsys):
        scen = write_scenario(tmp_path, "s.json", {"gains": [0.6, 1.0, 1.4]})
        out = tmp_path / "out"
        assert main(["periodic", "--scenario", scen, "--out", str(out)]) == 0
        assert "stable = True" in capsys.readouterr().out
        lines = (out / "periodic.csv").read_text().splitlines()
        assert lines[0] == "monodromy,geo_mean,log_mean,stable"

    def test_zero_gain_exit_two(self, tmp_path):
        scen = write_scenario(tmp_path, "s.json", {"gains": [1.0, 0.0]})
        assert main(["periodic", "--scenario", scen]) == 2


class TestReproducibility:
    @pytest.mark.parametrize("command,scenario", [
        ("evolve", {"spec": {"kind": "half_cauchy", "params": {"gamma": 0.75}},
                    "K_max": 5, "dump_densities": [1, 5]}),
        ("simulate", {"spec": {"kind": "lognormal",
                               "params": {"mu_alpha": -0.0558, "sigma_alpha": 0.409}},
                      "n_paths": 64, "K_max": 16, "seed": 123}),
        ("bounds", {"spec": {"kind": "lognormal",
                             "params": {"mu_alpha": -0.0558, "sigma_alpha": 0.409}},
                    "K_max": 12}),
        ("regions", {"mu_a": {"lo": 0.2, "hi": 2.0, "n": 6},
                     "sigma_a": {"lo": 0.0, "hi": 1.0, "n": 5}}),
        ("stabilize", {"nominal": {"lo": 0.2, "hi": 1.2, "n": 6},
                       "sigma": {"lo": 0.0, "hi": 0.6, "n": 3}, "n_grid": 1024}),
        ("periodic", {"gains": [0.5, 0.5, 4.0]}),
    ])
    def test_byte_identical_runs(self, tmp_path, command, scenario):
        scen = write_scenario(tmp_path, "s.json", scenario)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main([command, "--scenario", scen, "--out", str(out_a)]) == 0
        assert main([command, "--scenario", scen, "--out", str(out_b)]) == 0
        tree_a, tree_b = read_tree(out_a), read_tree(out_b)
        assert tree_a.keys() == tree_b.keys()
        for name in tree_a:
            assert tree_a[name] == tree_b[name], name


class TestConsoleEntry:
    def test_installed_script(self, tmp_path):
        scen = write_scenario(tmp_path, "s.json", {"spec": ref_spec_obj()})
        proc = subprocess.run([sys.executable, "-m", "stochgain.cli", "classify",
                               "--scenario", scen],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "median: stable" in proc.stdout
