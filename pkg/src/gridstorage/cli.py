"""Command-line front end.

Subcommands: classify, simulate, asympt, pickands, compare, validate.
Options come from an optional flat ``key=value`` config file (``#`` comments)
overridden by command-line flags. Exit codes: 0 success, 2 configuration
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import asymptotics, harness, pickands, processes, report, simulate, storage
from .errors import ConfigError, GridStorageError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_SPEC_KEYS = {"family", "hurst", "alpha", "c", "R", "R_scale"}
_INT_KEYS = {"reps", "seed", "workers", "block_size", "steps", "stream"}
_FLOAT_KEYS = {"hurst", "alpha", "c", "R_scale", "delta", "T", "safety", "scale", "S", "u"}
_LIST_KEYS = {"u_list", "S_grid"}

_KNOWN_KEYS = {
    "classify": _SPEC_KEYS,
    "simulate": _SPEC_KEYS | {"delta", "steps", "seed", "stream", "out"},
    "asympt": _SPEC_KEYS | {"delta", "T", "u_list", "kind", "out"},
    "pickands": _SPEC_KEYS | {"process", "scale", "delta", "S_grid", "reps", "seed", "out"},
    "compare": _SPEC_KEYS
    | {
        "delta",
        "T",
        "u_list",
        "reps",
        "seed",
        "safety",
        "workers",
        "block_size",
        "pickands_point",
        "pickands_sup",
        "pickands_inf",
        "out",
    },
    "validate": set(),
}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in _LIST_KEYS:
        return tuple(float(x) for x in raw.split(",") if x.strip())
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS or key.startswith("pickands_"):
        return float(raw)
    return raw


def read_config(path: str, command: str) -> dict:
    known = _KNOWN_KEYS[command]
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in known:
            raise ConfigError(f"unknown config key: {key}")
        try:
            out[key] = _parse_value(key, raw)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return out


def _merge(defaults: dict, config: dict, flags: dict) -> dict:
    merged = dict(defaults)
    merged.update(config)
    merged.update({k: v for k, v in flags.items() if v is not None})
    return merged


def _spec_from(merged: dict) -> processes.ProcessSpec:
    cfg = {k: merged[k] for k in _SPEC_KEYS if merged.get(k) is not None}
    return processes.spec_from_config(cfg)


def _float_list(raw):
    if raw is None:
        return None
    if isinstance(raw, tuple):
        return raw
    return tuple(float(x) for x in str(raw).split(",") if x.strip())


def _add_spec_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=("fbm", "integrated_srd", "integrated_lrd"))
    p.add_argument("--hurst", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--R", choices=("exp", "pow"))
    p.add_argument("--R-scale", dest="R_scale", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridstorage",
        description="Grid-scanned Gaussian storage processes: simulation, "
        "asymptotics, and Monte Carlo cross-validation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="report the growth regime of sigma^2(t)/t")
    p.add_argument("--config")
    _add_spec_flags(p)

    p = sub.add_parser("simulate", help="draw one path and dump it as CSV")
    p.add_argument("--config")
    _add_spec_flags(p)
    p.add_argument("--delta", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--stream", type=int)
    p.add_argument("--out")

    p = sub.add_parser("asympt", help="evaluate the analytic approximations")
    p.add_argument("--config")
    _add_spec_flags(p)
    p.add_argument("--delta", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--u", dest="u_list")
    p.add_argument("--kind", choices=("point", "sup", "inf", "all"))
    p.add_argument("--out")

    p = sub.add_parser("pickands", help="estimate window functionals and the rate constant")
    p.add_argument("--config")
    _add_spec_flags(p)
    p.add_argument("--process", choices=("fbm", "eta"))
    p.add_argument("--scale", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--S-grid", dest="S_grid")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = sub.add_parser("compare", help="Monte Carlo vs analytic comparison table")
    p.add_argument("--config")
    _add_spec_flags(p)
    p.add_argument("--delta", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--u", dest="u_list")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--safety", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--block-size", dest="block_size", type=int)
    p.add_argument("--pickands-point", dest="pickands_point", type=float)
    p.add_argument("--pickands-sup", dest="pickands_sup", type=float)
    p.add_argument("--pickands-inf", dest="pickands_inf", type=float)
    p.add_argument("--out")

    sub.add_parser("validate", help="run the fast invariant battery")
    return parser


def _gather(args: argparse.Namespace, command: str, defaults: dict) -> dict:
    config = read_config(args.config, command) if getattr(args, "config", None) else {}
    flags = {
        k: v for k, v in vars(args).items() if k not in ("command", "config") and v is not None
    }
    if "u_list" in flags:
        flags["u_list"] = _float_list(flags["u_list"])
    if "S_grid" in flags:
        flags["S_grid"] = _float_list(flags["S_grid"])
    return _merge(defaults, config, flags)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_classify(args) -> int:
    merged = _gather(args, "classify", {"family": "fbm", "c": 1.0})
    spec = _spec_from(merged)
    regime = processes.classify_regime(spec)
    payload = {
        "regime": regime.regime,
        "alpha": regime.alpha,
        "phi": "inf" if math.isinf(regime.phi) else regime.phi,
        "condition_B_ok": regime.condition_B_ok,
    }
    print(json.dumps(payload))
    return EXIT_OK


def _cmd_simulate(args) -> int:
    merged = _gather(
        args,
        "simulate",
        {"family": "fbm", "c": 1.0, "delta": 0.01, "steps": 1000, "seed": 0, "stream": 0, "out": "."},
    )
    spec = _spec_from(merged)
    grid = simulate.GridSpec(delta=merged["delta"], horizon_n=merged["steps"])
    stream = simulate.RngStream(merged["seed"], merged["stream"])
    sampler = simulate.IncrementSampler(spec.variance.eval, grid.delta, grid.horizon_n)
    gen = stream.generator()
    values = sampler.sample_paths(gen, 1)[0]
    drifted = values - spec.drift_c * grid.times()
    path = simulate.PathSample(values=values, drifted=drifted, seed=stream, grid=grid, drift_c=spec.drift_c)
    os.makedirs(merged["out"], exist_ok=True)
    csv_path = os.path.join(merged["out"], "path.csv")
    with open(csv_path, "w", newline="") as fh:
        simulate.dump_path_csv(path, fh)
    fig_path = os.path.join(merged["out"], "path.png")
    report.render_path_figure(grid.times(), drifted, fig_path)
    result = storage.storage_window(path, T=0.0)
    print(json.dumps({"csv": csv_path, "figure": fig_path, **result.to_json_dict()}))
    return EXIT_OK


def _asympt_entries(spec, merged):
    kinds = ("point", "sup", "inf") if merged["kind"] == "all" else (merged["kind"],)
    regime = processes.classify_regime(spec)
    entries = []
    for u in merged["u_list"]:
        cq = asymptotics.core_quantities(spec, u, regime)
        for kind in kinds:
            if kind == "point":
                approx = asymptotics.predict_point(spec, u, merged["delta"], regime=regime)
            elif kind == "sup":
                approx = asymptotics.predict_sup(spec, u, merged["T"], merged["delta"], regime=regime)
            else:
                approx = asymptotics.predict_inf(spec, u, merged["T"], merged["delta"], regime=regime)
            entries.append((cq, approx))
    return entries


def _cmd_asympt(args) -> int:
    merged = _gather(
        args,
        "asympt",
        {"family": "fbm", "c": 1.0, "delta": 0.1, "T": 0.0, "u_list": (10.0,), "kind": "all", "out": None},
    )
    if not merged["u_list"]:
        raise ConfigError("asympt needs at least one exceedance level u")
    spec = _spec_from(merged)
    entries = _asympt_entries(spec, merged)
    if merged["out"]:
        os.makedirs(merged["out"], exist_ok=True)
        csv_path = os.path.join(merged["out"], "asympt.csv")
        report.write_asympt_csv(entries, csv_path)
        report.render_asympt_figure(entries, os.path.join(merged["out"], "asympt.png"))
        print(json.dumps({"csv": csv_path, "rows": len(entries)}))
    else:
        report.write_asympt_csv(entries, "/dev/stdout")
    return EXIT_OK


def _cmd_pickands(args) -> int:
    merged = _gather(
        args,
        "pickands",
        {
            "process": "fbm",
            "alpha": 0.5,
            "scale": 1.0,
            "family": "fbm",
            "c": 1.0,
            "delta": 0.01,
            "S_grid": None,
            "reps": 100_000,
            "seed": 0,
            "out": ".",
        },
    )
    if merged["process"] == "fbm":
        xi = pickands.fbm_exponent(merged["alpha"], scale=merged["scale"])
    else:
        spec = _spec_from(merged)
        regime = processes.classify_regime(spec)
        xi = pickands.eta_process(spec, regime)
    estimate = pickands.estimate_H_rate(
        xi,
        merged["delta"],
        S_grid=merged["S_grid"],
        reps=merged["reps"],
        rng=simulate.RngStream(merged["seed"], 0),
    )
    os.makedirs(merged["out"], exist_ok=True)
    csv_path = os.path.join(merged["out"], "pickands.csv")
    report.write_pickands_csv(estimate, csv_path)
    report.render_pickands_figure(estimate, os.path.join(merged["out"], "pickands.png"))
    print(
        json.dumps(
            {
                "csv": csv_path,
                "process_tag": estimate.process_tag,
                "rate": estimate.value,
                "se": estimate.std_error,
            }
        )
    )
    return EXIT_OK


def _cmd_compare(args) -> int:
    merged = _gather(
        args,
        "compare",
        {
            "family": "fbm",
            "c": 1.0,
            "delta": 0.1,
            "T": 0.0,
            "u_list": None,
            "reps": 10_000,
            "seed": 0,
            "safety": 3.0,
            "workers": 1,
            "block_size": 2048,
            "pickands_point": None,
            "pickands_sup": None,
            "pickands_inf": None,
            "out": ".",
        },
    )
    if not merged["u_list"]:
        raise ConfigError("compare needs u (comma-separated exceedance levels)")
    spec = _spec_from(merged)
    cfg = harness.ExperimentConfig(
        spec=spec,
        delta=merged["delta"],
        T=merged["T"],
        u_list=merged["u_list"],
        reps=merged["reps"],
        root_seed=merged["seed"],
        safety=merged["safety"],
        output_paths=merged["out"],
        workers=merged["workers"],
        block_size=merged["block_size"],
        pickands_point=merged["pickands_point"],
        pickands_window_sup=merged["pickands_sup"],
        pickands_window_inf=merged["pickands_inf"],
    )
    rows = harness.estimate_probabilities(cfg)
    os.makedirs(merged["out"], exist_ok=True)
    csv_path = os.path.join(merged["out"], "compare.csv")
    json_path = os.path.join(merged["out"], "compare.json")
    fig_path = os.path.join(merged["out"], "compare.png")
    report.write_comparison_csv(rows, csv_path)
    report.write_comparison_json(rows, json_path)
    report.render_comparison_figure(rows, fig_path)
    print(json.dumps({"csv": csv_path, "json": json_path, "figure": fig_path, "rows": len(rows)}))
    return EXIT_OK


def _cmd_validate(_args) -> int:
    checks = []

    def check(name, fn):
        checks.append((name, fn))

    def survival():
        from scipy.special import erfc

        for x in (-5.0, 0.0, 1.0, 8.0, 30.0):
            a = asymptotics.standard_normal_survival(x)
            b = 0.5 * erfc(x / math.sqrt(2.0))
            assert abs(a - b) <= 1e-12 * max(b, 1e-300)

    check("gaussian survival matches erfc form", survival)

    def fbm_identities():
        spec = processes.fbm_spec(0.25, 1.0)
        cq = asymptotics.core_quantities(spec, 1000.0)
        C = asymptotics.corollary_constants(0.25, 1.0)["C_H"]
        assert abs(cq.t_u - cq.t_star) <= 1e-8 * cq.t_star
        assert abs(cq.m_u / (C * 1000.0**0.75) - 1.0) <= 1e-8

    check("optimizer reproduces the closed-form minimum", fbm_identities)

    def multiplicity():
        spec = processes.fbm_spec(0.25, 1.0)
        point = asymptotics.predict_point(spec, 50.0, 1.0)
        sup = asymptotics.predict_sup(spec, 50.0, 3.0, 1.0)
        assert sup.value == 4.0 * point.value

    check("window multiplicity in the small-growth regime", multiplicity)

    def brute_force():
        rng = np.random.default_rng(12345)
        for _ in range(50):
            n = int(rng.integers(2, 10))
            drifted = rng.standard_normal(n + 1)
            drifted[0] = 0.0
            j_max = int(rng.integers(0, n + 1))
            q0, sup, inf, _flag = storage.window_statistics(drifted, j_max)
            qs = [max(drifted[i] - drifted[j] for i in range(j, n + 1)) for j in range(j_max + 1)]
            assert q0 == qs[0] and sup == max(qs) and inf == min(qs)

    check("window scan equals the exhaustive definition", brute_force)

    def ordering():
        spec = processes.fbm_spec(0.5, 1.0)
        cfg = harness.ExperimentConfig(
            spec=spec, delta=0.1, T=0.5, u_list=(0.5, 1.0), reps=2000, root_seed=0
        )
        rows = harness.estimate_probabilities(cfg)
        for row in rows:
            assert row.mc["inf"].p_hat <= row.mc["point"].p_hat <= row.mc["sup"].p_hat

    check("coupled estimates keep the path ordering", ordering)

    def two_point():
        from scipy.special import ndtr

        xi = pickands.fbm_exponent(0.5)
        est = pickands.estimate_H_window(xi, np.array([0.0, 1.0]), 20000, 7)
        exact = 2.0 * ndtr(math.sqrt(0.5))
        assert abs(est.value - exact) <= 5.0 * max(est.std_error, 1e-9)

    check("two-point window mean matches the closed form", two_point)

    failed = 0
    for name, fn in checks:
        try:
            fn()
        except Exception as exc:  # noqa: BLE001 - report and keep going
            failed += 1
            print(f"FAIL - {name}: {exc}")
        else:
            print(f"ok - {name}")
    if failed:
        print(f"{failed} of {len(checks)} checks failed")
        return EXIT_NUMERIC
    print(f"all {len(checks)} checks passed")
    return EXIT_OK


_COMMANDS = {
    "classify": _cmd_classify,
    "simulate": _cmd_simulate,
    "asympt": _cmd_asympt,
    "pickands": _cmd_pickands,
    "compare": _cmd_compare,
    "validate": _cmd_validate,
}


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage, 0 on --help; pass both through
        return int(exc.code or 0) and EXIT_CONFIG
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GridStorageError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
