"""Batch command-line interface.

Subcommands: `sweep` runs a configured one-axis sweep, `figure` runs a
named desk-scale preset, `predict-trace` follows one drop epoch by epoch,
`selftest` re-runs the built-in numerical cross-checks.  Report paths
write a CSV (fixed header, RFC-4180 quoting), a PNG rendering of the same
rows and a JSON run manifest; identical seeds give byte-identical CSV
regardless of --threads.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import math
import os
import platform
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .config import (ConfigError, SweepSpec, apply_axis, apply_predictor_label,
                     parse_config, serialize_config)
from .evaluate import ExperimentConfig, run_experiment, run_prediction_trace
from .figures import render_sweep_figure, render_trace_figure

CSV_HEADER = ("axis", "value", "predictor", "drops", "nmse_db_mean", "nmse_db_std",
              "se_sum_mean", "se_sum_std", "seed")


def _fmt(v: float) -> str:
    return f"{v:.6f}"


def _run_cell(args):
    axis, value, label, base = args
    cfg = apply_axis(base, axis, value)
    if axis != "predictor":
        cfg = apply_predictor_label(cfg, label)
    result = run_experiment(cfg)
    return {
        "axis": axis,
        "value": value,
        "predictor": label,
        "drops": cfg.drops,
        "nmse_db_mean": _fmt(result.prediction.mean_db),
        "nmse_db_std": _fmt(result.prediction.std_db),
        "se_sum_mean": _fmt(result.spectral.mean_sum),
        "se_sum_std": _fmt(result.spectral.std_sum),
        "seed": base.seed,
    }


def run_sweep(spec: SweepSpec, threads: int = 1) -> list:
    """Evaluate every (axis value, predictor) cell; row order is fixed."""
    cells = []
    for value in spec.values:
        if spec.axis == "predictor":
            cells.append((spec.axis, value, str(value), spec.base))
        else:
            for label in spec.predictors:
                cells.append((spec.axis, value, label, spec.base))
    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_run_cell, cells))
    else:
        rows = [_run_cell(c) for c in cells]
    return rows


def write_rows_csv(rows: list, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_HEADER, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def write_manifest(path: str, command: str, config_obj, seed: int, threads: int,
                   outputs: list, preset: str | None = None) -> None:
    manifest = {
        "command": command,
        "preset": preset,
        "seed": seed,
        "threads": threads,
        "config": serialize_config(config_obj),
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "chanpred": __version__,
        },
        "outputs": sorted(os.path.basename(p) for p in outputs),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _desk_scenario(**overrides):
    from .channel import ClusterScenario
    base = dict(n_clusters=60, rays_per_cluster=1, delay_spread=300e-9,
                cluster_decay_db=0.75)
    base.update(overrides)
    return ClusterScenario(**base)


def _desk_base(**overrides) -> ExperimentConfig:
    from .channel import SPEED_OF_LIGHT, ArrayGeometry, SubcarrierGrid
    carrier = 3.5e9
    lam = SPEED_OF_LIGHT / carrier
    n_f = 16
    delta_f = 2e6
    defaults = dict(
        geometry=ArrayGeometry(n_v=4, n_h=8, d_v=0.8 * lam, d_h=0.5 * lam, lambda0=lam),
        grid=SubcarrierGrid(n_f=n_f, delta_f=delta_f,
                            f1=carrier - delta_f * (n_f - 1) / 2),
        scenario=_desk_scenario(),
        n_ues=4,
        n_rx_antennas=2,
        ue_speeds_kmh=(30.0,),
        delta_t=2.0e-3,
        csi_delay=4.0e-3,
        history_len=15,
        predictor="pad",
        pad_order=6,
        gamma=0.99,
        drops=10,
        seed=0,
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


_SNR_GRID = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
_ALL_LABELS = ("stationary", "pad", "vector_prony", "fir_wiener", "none")


def figure_preset(name: str) -> SweepSpec:
    """Desk-scale sweep presets named after the report figures they mimic."""
    if name == "fig2-desk":
        base = _desk_base(ue_speeds_kmh=(30.0,))
        return SweepSpec("snr_db", _SNR_GRID, _ALL_LABELS, base)
    if name == "fig3-desk":
        base = _desk_base(ue_speeds_kmh=(60.0,))
        return SweepSpec("snr_db", _SNR_GRID, _ALL_LABELS, base)
    if name == "fig4-desk":
        base = _desk_base(ue_speeds_kmh=(3.0, 30.0, 60.0, 90.0))
        return SweepSpec("snr_db", _SNR_GRID, ("stationary", "pad", "vector_prony", "none"), base)
    if name == "fig5-desk":
        base = _desk_base(ue_speeds_kmh=(60.0,), n_ues=1, history_len=7,
                          pad_order=2, gamma=0.995, drops=20,
                          scenario=_desk_scenario(n_clusters=20, rays_per_cluster=1,
                                                  cluster_decay_db=3.0))
        return SweepSpec("n_antennas", (4, 16, 64, 256), ("pad",), base)
    if name == "fig6-desk":
        scenario = _desk_scenario(n_clusters=6, rays_per_cluster=10,
                                  cluster_decay_db=10.0, delay_spread=100e-9)
        base = _desk_base(ue_speeds_kmh=(90.0,), scenario=scenario)
        return SweepSpec("snr_db", _SNR_GRID, ("stationary", "pad", "vector_prony", "none"), base)
    if name == "fig7-desk":
        base = _desk_base(ue_speeds_kmh=(30.0,), sample_snr_db=20.0, denoise="both")
        return SweepSpec("snr_db", _SNR_GRID, ("stationary", "pad", "vector_prony", "none"), base)
    raise ConfigError(f"unknown figure preset {name!r}; known: "
                      "fig2-desk fig3-desk fig4-desk fig5-desk fig6-desk fig7-desk")


FIGURE_PRESETS = ("fig2-desk", "fig3-desk", "fig4-desk", "fig5-desk",
                  "fig6-desk", "fig7-desk")


def _with_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "drops", None) is not None:
        cfg = replace(cfg, drops=args.drops)
    return cfg


def _ensure_out(args) -> str:
    out = args.out
    os.makedirs(out, exist_ok=True)
    return out


def _cmd_sweep(args) -> int:
    spec = parse_config(args.config)
    if not isinstance(spec, SweepSpec):
        print("error: config has no [sweep] section; use predict-trace for "
              "single runs", file=sys.stderr)
        return 2
    spec = replace(spec, base=_with_overrides(spec.base, args))
    return _emit_sweep(spec, args, "sweep", "sweep", preset=None)


def _cmd_figure(args) -> int:
    spec = figure_preset(args.preset)
    spec = replace(spec, base=_with_overrides(spec.base, args))
    return _emit_sweep(spec, args, "figure", args.preset.replace("-", "_"),
                       preset=args.preset)


def _emit_sweep(spec: SweepSpec, args, command: str, stem: str, preset) -> int:
    out = _ensure_out(args)
    rows = run_sweep(spec, threads=args.threads)
    csv_path = os.path.join(out, f"{stem}.csv")
    png_path = os.path.join(out, f"{stem}.png")
    manifest_path = os.path.join(out, f"{stem}_manifest.json")
    write_rows_csv(rows, csv_path)
    render_sweep_figure(rows, spec.axis, png_path)
    write_manifest(manifest_path, command, spec, spec.base.seed, args.threads,
                   [csv_path, png_path], preset=preset)
    for p in (csv_path, png_path, manifest_path):
        print(p)
    return 0


def _cmd_predict_trace(args) -> int:
    cfg = parse_config(args.config)
    if isinstance(cfg, SweepSpec):
        cfg = cfg.base
    cfg = _with_overrides(cfg, args)
    epochs, nmse, _ = run_prediction_trace(cfg, n_epochs=args.epochs)
    out = _ensure_out(args)
    csv_path = os.path.join(out, "trace.csv")
    png_path = os.path.join(out, "trace.png")
    manifest_path = os.path.join(out, "trace_manifest.json")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("epoch", "nmse_db"))
        for e, v in zip(epochs, nmse):
            writer.writerow((int(e), _fmt(float(v))))
    render_trace_figure(epochs, nmse, png_path)
    write_manifest(manifest_path, "predict-trace", cfg, cfg.seed, 1,
                   [csv_path, png_path])
    for p in (csv_path, png_path, manifest_path):
        print(p)
    return 0


def _selftest_checks():
    import cmath

    from .channel import (ArrayGeometry, PathParams, SubcarrierGrid,
                          closed_form_inner_product, generalized_steering)
    from .denoise import (SpatialCovariance, TruncationPolicy, build_lmmse_filter,
                          tk_solve)
    from .evaluate import ezf_precoder
    from .pad import AngularDelayDims, inverse_project, project_to_angular_delay
    from .prony import pinv_solve, scalar_prony_fit, scalar_prony_predict, vector_prony_predict

    rng = np.random.default_rng(7)
    geom = ArrayGeometry(n_v=3, n_h=4, d_v=0.8 * 0.0857, d_h=0.5 * 0.0857, lambda0=0.0857)
    grid = SubcarrierGrid(n_f=5, delta_f=30e3, f1=3.5e9)

    def random_path():
        th_d = rng.uniform(0.3, math.pi - 0.3)
        th_a = rng.uniform(0.3, math.pi - 0.3)
        return PathParams(th_d, rng.uniform(-math.pi / 2, math.pi / 2), th_a,
                          rng.uniform(-math.pi / 2, math.pi / 2),
                          rng.uniform(0, 1e-6), 1.0 + 0.0j)

    def check_inner_products():
        for _ in range(50):
            p, q = random_path(), random_path()
            direct = complex(np.vdot(generalized_steering(p, geom, grid),
                                     generalized_steering(q, geom, grid)))
            closed = closed_form_inner_product(p, q, geom, grid)
            if abs(direct - closed) > 1e-10 * max(abs(direct), 1.0):
                raise AssertionError(f"mismatch {direct} vs {closed}")

    def check_projection():
        dims = AngularDelayDims(3, 4, 5)
        vec = rng.standard_normal(60) + 1j * rng.standard_normal(60)
        g = project_to_angular_delay(vec, dims)
        if abs(np.linalg.norm(g) - np.linalg.norm(vec)) > 1e-10:
            raise AssertionError("projection is not unitary")
        back = inverse_project(g, dims)
        if np.max(np.abs(back - vec)) > 1e-10:
            raise AssertionError("projection round trip failed")

    def check_one_pole():
        pole = cmath.exp(2j * math.pi * 0.173)
        y = np.array([pole ** k for k in range(2)]) * (0.7 - 0.4j)
        coeffs = scalar_prony_fit(y, 1)
        pred = scalar_prony_predict(coeffs, y[-1:], 9)
        want = (0.7 - 0.4j) * pole ** 10
        if abs(pred - want) > 1e-10 * abs(want):
            raise AssertionError("one-pole prediction is not exact")

    def check_vector_recursion():
        poles = np.exp(1j * np.array([0.31, -0.74, 1.62]))
        basis = rng.standard_normal((24, 3)) + 1j * rng.standard_normal((24, 3))
        samples = np.stack([basis @ poles ** k for k in range(4)], axis=1)
        want = basis @ poles ** 9
        got = vector_prony_predict(samples, 6)
        if np.max(np.abs(got - want)) > 1e-8 * np.max(np.abs(want)):
            raise AssertionError("vector recursion prediction is not exact")

    def check_tk_full_rank():
        a = rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4))
        b = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        full = tk_solve(a, b, TruncationPolicy(gamma_tk=1.0))
        plain = -pinv_solve(a, b)
        if np.max(np.abs(full - plain)) > 1e-10:
            raise AssertionError("gamma_tk=1 does not match the plain solver")

    def check_ezf():
        chans = [rng.standard_normal((2, 8)) + 1j * rng.standard_normal((2, 8))
                 for _ in range(3)]
        w = ezf_precoder(chans, power=2.0)
        total = float(np.sum(np.abs(w) ** 2))
        if abs(total - 2.0) > 1e-9:
            raise AssertionError("precoder power normalization failed")

    def check_lmmse_identity():
        m = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        cov = SpatialCovariance.from_matrix(m @ m.conj().T + np.eye(5))
        filt = build_lmmse_filter(cov, 0.0, n_r=2)
        if np.max(np.abs(filt.matrix - np.eye(5))) > 1e-12:
            raise AssertionError("zero-noise filter is not the identity")

    return (
        ("closed-form steering inner products", check_inner_products),
        ("angular-delay projection unitarity", check_projection),
        ("one-pole recursion exactness", check_one_pole),
        ("vector recursion exactness", check_vector_recursion),
        ("truncated solver consistency", check_tk_full_rank),
        ("precoder power normalization", check_ezf),
        ("zero-noise filter identity", check_lmmse_identity),
    )


def _cmd_selftest(args) -> int:
    failures = 0
    for name, check in _selftest_checks():
        try:
            check()
        except Exception as exc:  # pragma: no cover - failure path
            failures += 1
            print(f"FAIL - {name}: {exc}")
        else:
            print(f"ok - {name}")
    if failures:
        print(f"{failures} selftest check(s) failed")
        return 1
    print("all selftest checks passed")
    return 0


def _add_common(parser, config_required: bool = True, with_epochs: bool = False):
    if config_required:
        parser.add_argument("--config", required=True, help="path to an INI config file")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for sweep cells")
    parser.add_argument("--drops", type=int, default=None,
                        help="override the number of Monte Carlo drops")
    if with_epochs:
        parser.add_argument("--epochs", type=int, default=8,
                            help="number of sliding prediction epochs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chanpred",
        description="Prony-based channel prediction experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run a configured one-axis sweep")
    _add_common(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_fig = sub.add_parser("figure", help="run a named desk-scale preset")
    p_fig.add_argument("--preset", required=True, choices=FIGURE_PRESETS)
    _add_common(p_fig, config_required=False)
    p_fig.set_defaults(func=_cmd_figure)

    p_trace = sub.add_parser("predict-trace",
                             help="per-epoch prediction error for one drop")
    _add_common(p_trace, with_epochs=True)
    p_trace.set_defaults(func=_cmd_predict_trace)

    p_self = sub.add_parser("selftest", help="run built-in numerical cross-checks")
    p_self.set_defaults(func=_cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
