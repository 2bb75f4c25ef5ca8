"""Command line surface: scenario files in, CSV/JSON plot data out.

Every subcommand reads a JSON scenario file, validates it against a strict
schema (unknown fields are rejected), runs the corresponding library routine
and writes its data artifacts plus a ``manifest.json`` with input echo,
versions and output checksums.  Outputs contain no timestamps, so a command
run twice with the same scenario and seed produces byte-identical files.
"""
from __future__ import annotations

import argparse
import hashlib
import io
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np
import scipy

from . import __version__
from .bounds import tail_report
from .distributions import Distribution, LogNormalGain, distribution_from_json
from .evolution import default_alpha_grid, evolve_grid, evolve_lognormal
from .grids import x_space_density
from .montecarlo import sample_stats, simulate, tail_frequency_curve
from .stability import (
    PlantSpec,
    Stability,
    StabilityVerdict,
    classify,
    periodic_gain_analysis,
    region_boundaries,
    stabilization_region,
    stabilization_verdict,
)

_NUM = {"type": "number"}
_POS_INT = {"type": "integer", "minimum": 1}
_SEED = {"type": "integer", "minimum": 0}
_FORMAT = {"enum": ["csv", "json"]}
_SPEC = {
    "type": "object",
    "properties": {"kind": {"type": "string"}, "params": {"type": "object"},
                   "label": {"type": "string"}},
    "required": ["kind", "params"],
    "additionalProperties": False,
}
_PLANT = {
    "type": "object",
    "properties": {"tau": _NUM, "gamma_gain": _NUM, "delta": _SPEC},
    "required": ["tau", "gamma_gain", "delta"],
    "additionalProperties": False,
}
_AXIS = {
    "type": "object",
    "properties": {"lo": _NUM, "hi": _NUM, "n": {"type": "integer", "minimum": 2}},
    "required": ["lo", "hi", "n"],
    "additionalProperties": False,
}
_COMMON = {"out": {"type": "string"}, "seed": _SEED, "format": _FORMAT}

_SCHEMAS = {
    "classify": {
        "type": "object",
        "properties": {**_COMMON, "spec": _SPEC, "eps": {"type": "number", "exclusiveMinimum": 0},
                       "criterion": {"enum": ["median", "mean", "variance", "all"]}},
        "required": ["spec"],
        "additionalProperties": False,
    },
    "evolve": {
        "type": "object",
        "properties": {**_COMMON, "spec": _SPEC, "K_max": _POS_INT, "stride": _POS_INT,
                       "dump_densities": {"type": "array", "items": _POS_INT},
                       "x_window": _AXIS},
        "required": ["spec", "K_max"],
        "additionalProperties": False,
    },
    "simulate": {
        "type": "object",
        "properties": {**_COMMON, "spec": _SPEC, "n_paths": _POS_INT, "K_max": _POS_INT,
                       "threshold": {"type": "number", "exclusiveMinimum": 0},
                       "dump_paths": {"type": "boolean"}},
        "required": ["spec", "n_paths", "K_max"],
        "additionalProperties": False,
    },
    "bounds": {
        "type": "object",
        "properties": {**_COMMON, "spec": _SPEC, "K_max": _POS_INT,
                       "x_bnd": {"type": "number", "exclusiveMinimum": 0},
                       "exact_method": {"enum": ["auto", "closed_form", "grid", "none"]}},
        "required": ["spec", "K_max"],
        "additionalProperties": False,
    },
    "regions": {
        "type": "object",
        "properties": {**_COMMON, "mu_a": _AXIS, "sigma_a": _AXIS},
        "required": ["mu_a", "sigma_a"],
        "additionalProperties": False,
    },
    "stabilize": {
        "type": "object",
        "properties": {**_COMMON, "plant": _PLANT, "nominal": _AXIS, "sigma": _AXIS,
                       "n_grid": _POS_INT,
                       "criterion": {"enum": ["median", "mean", "variance", "all"]}},
        "additionalProperties": False,
    },
    "periodic": {
        "type": "object",
        "properties": {**_COMMON, "gains": {"type": "array", "items": _NUM, "minItems": 1},
                       "window": _POS_INT},
        "required": ["gains"],
        "additionalProperties": False,
    },
}


class ScenarioError(ValueError):
    pass


def _load_scenario(command: str, path: str, args) -> dict:
    try:
        with open(path) as fh:
            scenario = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    try:
        jsonschema.validate(scenario, _SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        raise ScenarioError(f"invalid scenario: {exc.message}") from exc
    # flag overrides win over scenario fields
    if args.out is not None:
        scenario["out"] = args.out
    if args.seed is not None:
        scenario["seed"] = args.seed
    if args.format is not None:
        scenario["format"] = args.format
    scenario.setdefault("format", "csv")
    return scenario


def _spec_from(scenario_spec: dict) -> Distribution:
    try:
        return distribution_from_json(scenario_spec)
    except TypeError as exc:
        raise ScenarioError(f"invalid distribution parameters: {exc}") from exc
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc


def _csv_text(write_fn) -> str:
    buf = io.StringIO()
    write_fn(buf)
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _curve_csv(curves: dict[str, np.ndarray]) -> str:
    lines = ["criterion,point_index,x,y"]
    for name in sorted(curves):
        for i, (x, y) in enumerate(curves[name]):
            lines.append(f"{name},{i},{float(x)!r},{float(y)!r}")
    return "\n".join(lines) + "\n"


def _curve_json(curves: dict[str, np.ndarray]) -> str:
    return _json_text({name: [[float(x), float(y)] for x, y in pts]
                       for name, pts in curves.items()})


def _write_outputs(command: str, scenario: dict, artifacts: dict[str, str]) -> None:
    outdir = Path(scenario.get("out", "."))
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "scenario": {k: v for k, v in scenario.items() if k != "out"},
        "versions": {"stochgain": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "outputs": {name: hashlib.sha256(text.encode()).hexdigest()
                    for name, text in sorted(artifacts.items())},
    }
    for name, text in artifacts.items():
        (outdir / name).write_text(text)
    (outdir / "manifest.json").write_text(_json_text(manifest))


def _verdict_report(verdict: StabilityVerdict, dist: Distribution | None) -> str:
    lines = []
    for name, state, margin in [
        ("median", verdict.median, verdict.margin_median),
        ("mean", verdict.mean, verdict.margin_mean),
        ("variance", verdict.variance, verdict.margin_variance),
    ]:
        lines.append(f"{name}: {state.value} (margin {margin:+.6g})")
    if dist is not None:
        try:
            stats = dist.alpha_stats()
            lines.append(f"log-gain mean E[ln a] = {stats.mu_alpha:.6g}, "
                         f"variance = {stats.var_alpha:.6g}")
        except ValueError:
            pass
        moments = dist.a_moments()
        mu = f"{moments.mu_a:.6g}" if moments.mu_finite else "infinite"
        var = f"{moments.var_a:.6g}" if moments.var_finite else "infinite"
        lines.append(f"gain mean E[a] = {mu}, variance = {var}")
    lines.append(verdict.criteria_used)
    return "\n".join(lines)


def _verdict_obj(verdict: StabilityVerdict) -> dict:
    return {
        "median": verdict.median.value,
        "mean": verdict.mean.value,
        "variance": verdict.variance.value,
        "margin_median": verdict.margin_median,
        "margin_mean": verdict.margin_mean,
        "margin_variance": verdict.margin_variance,
        "criteria_used": verdict.criteria_used,
    }


def _exit_code(verdict: StabilityVerdict, criterion: str) -> int:
    if criterion == "all":
        states = (verdict.median, verdict.mean, verdict.variance)
        return 0 if all(s is Stability.STABLE for s in states) else 1
    return 0 if verdict.by_name(criterion) is Stability.STABLE else 1


def _cmd_classify(scenario: dict) -> int:
    dist = _spec_from(scenario["spec"])
    verdict = classify(dist, eps=scenario.get("eps", 1e-9))
    print(_verdict_report(verdict, dist))
    if "out" in scenario:
        _write_outputs("classify", scenario, {"verdict.json": _json_text(_verdict_obj(verdict))})
    return _exit_code(verdict, scenario.get("criterion", "median"))


def _cmd_evolve(scenario: dict) -> int:
    dist = _spec_from(scenario["spec"])
    k_max = scenario["K_max"]
    stride = scenario.get("stride", 1)
    dumps = sorted(set(scenario.get("dump_densities", [])))
    if any(k > k_max for k in dumps):
        raise ScenarioError("dump_densities entries must not exceed K_max")
    if isinstance(dist, LogNormalGain):
        ks = sorted({1, k_max, *range(stride, k_max + 1, stride), *dumps})
        trace = evolve_lognormal(dist.mu_alpha, dist.sigma_alpha, ks, keep_pdfs=bool(dumps))
    else:
        falpha = default_alpha_grid(dist, k_max)
        trace = evolve_grid(falpha, k_max, stride=stride, keep_pdfs=bool(dumps))

    fmt = scenario["format"]
    artifacts: dict[str, str] = {}
    if fmt == "csv":
        artifacts["trace.csv"] = _csv_text(trace.write_csv)
    else:
        artifacts["trace.json"] = _json_text({
            "K": [int(k) for k in trace.K_values],
            "median_x": [float(v) for v in trace.medians_x],
            "mean_x": [float(v) for v in trace.means_x],
            "var_x": [float(v) for v in trace.variances_x],
            "tail_at_one": [float(v) for v in trace.tail_at_one],
        })
    if dumps:
        by_k = {int(k): pdf for k, pdf in zip(trace.K_values, trace.zeta_pdfs)}
        window = scenario.get("x_window")
        for k in dumps:
            pdf = by_k[k]
            if fmt == "csv":
                artifacts[f"zeta_density_K{k}.csv"] = _csv_text(pdf.write_csv)
            else:
                artifacts[f"zeta_density_K{k}.json"] = _json_text(pdf.to_json_obj())
            if window:
                x, fx = x_space_density(pdf, window["lo"], window["hi"], window["n"])
                rows = "\n".join(f"{float(xi)!r},{float(fi)!r}" for xi, fi in zip(x, fx))
                artifacts[f"x_density_K{k}.csv"] = "node,density\n" + rows + "\n"
    _write_outputs("evolve", scenario, artifacts)
    return 0


def _cmd_simulate(scenario: dict) -> int:
    if "seed" not in scenario:
        raise ScenarioError("simulation commands require an explicit seed")
    dist = _spec_from(scenario["spec"])
    ens = simulate(dist, scenario["n_paths"], scenario["K_max"], scenario["seed"])
    threshold = scenario.get("threshold", 1.0)
    curve = tail_frequency_curve(ens, threshold)
    rows = []
    for k in range(ens.K_max + 1):
        st = sample_stats(ens, k)
        rows.append((k, st.median, st.mean, st.log_mean,
                     curve.freq[k], curve.wilson_lo[k], curve.wilson_hi[k]))
    if scenario["format"] == "csv":
        lines = ["K,sample_median,sample_mean,sample_log_mean,tail_freq,wilson_lo,wilson_hi"]
        for row in rows:
            lines.append(",".join([str(row[0])] + [repr(float(v)) for v in row[1:]]))
        artifacts = {"summary.csv": "\n".join(lines) + "\n"}
    else:
        artifacts = {"summary.json": _json_text({
            "K": [r[0] for r in rows],
            "sample_median": [float(r[1]) for r in rows],
            "sample_mean": [float(r[2]) for r in rows],
            "sample_log_mean": [float(r[3]) for r in rows],
            "tail_freq": [float(r[4]) for r in rows],
            "wilson_lo": [float(r[5]) for r in rows],
            "wilson_hi": [float(r[6]) for r in rows],
            "threshold": threshold,
        })}
    if scenario.get("dump_paths", False):
        cells = ens.n_paths * (ens.K_max + 1)
        print(f"warning: writing all {ens.n_paths} log-state paths "
              f"({cells} values) to full_paths.csv", file=sys.stderr)
        header = "path," + ",".join(f"zeta_{k}" for k in range(ens.K_max + 1))
        lines = [header]
        for i in range(ens.n_paths):
            lines.append(",".join([str(i)] + [repr(float(z)) for z in ens.log_paths[i]]))
        artifacts["full_paths.csv"] = "\n".join(lines) + "\n"
    _write_outputs("simulate", scenario, artifacts)
    return 0


def _cmd_bounds(scenario: dict) -> int:
    dist = _spec_from(scenario["spec"])
    report = tail_report(dist, range(1, scenario["K_max"] + 1),
                         exact_method=scenario.get("exact_method", "auto"),
                         x_bnd=scenario.get("x_bnd", 1.0))
    artifacts: dict[str, str] = {}
    if scenario["format"] == "csv":
        artifacts["bounds.csv"] = _csv_text(report.write_csv)
    else:
        artifacts["bounds.json"] = _json_text({
            "K": [int(k) for k in report.K_values],
            "exact": None if report.exact is None else [float(v) for v in report.exact],
            "cantelli": [float(v) for v in report.cantelli],
            "chernoff": None if report.chernoff is None else [float(v) for v in report.chernoff],
        })
    if report.chernoff_c is not None:
        artifacts["chernoff.json"] = _json_text(
            {"c": report.chernoff_c, "lambda_star": report.lambda_star})
    _write_outputs("bounds", scenario, artifacts)
    return 0


def _axis(obj: dict) -> np.ndarray:
    return np.linspace(obj["lo"], obj["hi"], obj["n"])


def _cmd_regions(scenario: dict) -> int:
    curves = region_boundaries(_axis(scenario["mu_a"]), _axis(scenario["sigma_a"]))
    name = "regions.csv" if scenario["format"] == "csv" else "regions.json"
    text = _curve_csv(curves) if scenario["format"] == "csv" else _curve_json(curves)
    _write_outputs("regions", scenario, {name: text})
    return 0


def _cmd_stabilize(scenario: dict) -> int:
    if ("plant" in scenario) == ("nominal" in scenario):
        raise ScenarioError("stabilize needs exactly one of 'plant' or 'nominal'+'sigma' grids")
    if "plant" in scenario:
        plant = scenario["plant"]
        spec = PlantSpec(plant["tau"], plant["gamma_gain"], _spec_from(plant["delta"]))
        verdict = stabilization_verdict(spec, n_grid=scenario.get("n_grid", 16384))
        print(_verdict_report(verdict, None))
        if "out" in scenario:
            _write_outputs("stabilize", scenario,
                           {"verdict.json": _json_text(_verdict_obj(verdict))})
        return _exit_code(verdict, scenario.get("criterion", "median"))
    if "sigma" not in scenario:
        raise ScenarioError("stabilize region sweep needs both 'nominal' and 'sigma' grids")
    curves = stabilization_region(_axis(scenario["nominal"]), _axis(scenario["sigma"]),
                                  n_grid=scenario.get("n_grid", 8192))
    name = "stabilize_regions.csv" if scenario["format"] == "csv" else "stabilize_regions.json"
    text = _curve_csv(curves) if scenario["format"] == "csv" else _curve_json(curves)
    _write_outputs("stabilize", scenario, {name: text})
    return 0


def _cmd_periodic(scenario: dict) -> int:
    analysis = periodic_gain_analysis(scenario["gains"])
    print(f"monodromy = {analysis.monodromy!r}, geometric mean = {analysis.geo_mean!r}, "
          f"log mean = {analysis.log_mean!r}, stable = {analysis.stable}")
    obj = {"monodromy": analysis.monodromy, "geo_mean": analysis.geo_mean,
           "log_mean": analysis.log_mean, "stable": analysis.stable}
    if scenario["format"] == "csv":
        text = ("monodromy,geo_mean,log_mean,stable\n"
                f"{analysis.monodromy!r},{analysis.geo_mean!r},"
                f"{analysis.log_mean!r},{int(analysis.stable)}\n")
        artifacts = {"periodic.csv": text}
    else:
        artifacts = {"periodic.json": _json_text(obj)}
    if "out" in scenario:
        _write_outputs("periodic", scenario, artifacts)
    return 0


_COMMANDS = {
    "classify": _cmd_classify,
    "evolve": _cmd_evolve,
    "simulate": _cmd_simulate,
    "bounds": _cmd_bounds,
    "regions": _cmd_regions,
    "stabilize": _cmd_stabilize,
    "periodic": _cmd_periodic,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stochgain",
        description="Stability analysis of the stochastic multiplicative feedback loop",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True, help="path to a JSON scenario file")
        p.add_argument("--out", default=None, help="output directory (overrides scenario)")
        p.add_argument("--seed", type=int, default=None, help="RNG seed (overrides scenario)")
        p.add_argument("--format", choices=["csv", "json"], default=None,
                       help="data file format (overrides scenario)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        scenario = _load_scenario(args.command, args.scenario, args)
        return _COMMANDS[args.command](scenario)
    except (ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
