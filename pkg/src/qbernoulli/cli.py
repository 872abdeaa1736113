"""Command-line driver: sweeps, classical scans, time series, collapses.

Machine-readable output paths go to stdout; progress goes to stderr.
Exit codes: 0 success, 1 configuration error, 2 numerical-corruption
abort, 3 fit non-convergence.
"""

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import io, scaling
from .circuits import ModelConfig, ModelVariant, VARIANT_NAMES
from .classical import classical_transition_scan
from .engine import RunOptions, derive_cell_seed, run_ensemble, sweep
from .errors import (
    ConfigError,
    FitConvergenceError,
    NumericalCorruptionError,
    QBernoulliError,
)
from .observables import DEFAULT_S0_THRESHOLD

_SWEEP_KEYS = {
    "variant", "L", "p_ctrl_grid", "p_proj", "p_global", "steps", "n_traj",
    "seed", "observables", "s0_threshold", "initial_state", "average_last",
}
_CLASSICAL_KEYS = {"L", "p_ctrl_grid", "n_traj", "seed", "steps", "target"}
_TIMESERIES_KEYS = {
    "variant", "L", "p_ctrl", "p_proj", "p_global", "steps", "n_traj",
    "seed", "initial_state", "record_every", "dense_until",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # config errors exit 1, not argparse's 2
        raise ConfigError(message)


def _log(msg):
    print(msg, file=sys.stderr, flush=True)


def load_config(path, allowed):
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    if p.suffix == ".json":
        cfg = json.loads(p.read_text())
    else:
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        with open(p, "rb") as fh:
            cfg = tomllib.load(fh)
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(
            f"unknown config keys {sorted(unknown)}; allowed: {sorted(allowed)}"
        )
    return cfg


def _require(cfg, key):
    if key not in cfg:
        raise ConfigError(f"config key {key!r} is required (no default)")
    return cfg[key]


def _parse_variant(name):
    try:
        return ModelVariant(name)
    except ValueError:
        raise ConfigError(
            f"unknown variant {name!r}; valid names: {', '.join(VARIANT_NAMES)}"
        ) from None


def _as_list(value, cast):
    if isinstance(value, (list, tuple)):
        return [cast(v) for v in value]
    return [cast(value)]


def _csv_floats(text):
    return [float(v) for v in text.split(",") if v != ""]


def _csv_ints(text):
    return [int(v) for v in text.split(",") if v != ""]


def _apply_overrides(cfg, args):
    if getattr(args, "p_ctrl", None) is not None:
        cfg["p_ctrl_grid"] = _csv_floats(args.p_ctrl)
    if getattr(args, "L", None) is not None:
        cfg["L"] = _csv_ints(args.L)
    if getattr(args, "traj", None) is not None:
        cfg["n_traj"] = args.traj
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "s0_threshold", None) is not None:
        cfg["s0_threshold"] = _csv_floats(args.s0_threshold)
    return cfg


def _sweep_grid(cfg):
    variant = _parse_variant(_require(cfg, "variant"))
    L_list = _as_list(_require(cfg, "L"), int)
    p_grid = _as_list(_require(cfg, "p_ctrl_grid"), float)
    steps = cfg.get("steps")
    grid = []
    for L in L_list:
        for p in p_grid:
            grid.append(ModelConfig(
                variant=variant, L=L, p_ctrl=p,
                p_proj=float(cfg.get("p_proj", 0.0)),
                p_global=float(cfg.get("p_global", 0.0)),
                steps=int(steps) if steps is not None else None,
                seed=int(_require(cfg, "seed")),
            ))
    return grid


def _sweep_options(cfg, args, record_timeseries=False):
    variant = _parse_variant(_require(cfg, "variant"))
    observables = tuple(cfg.get("observables", (variant.order_parameter, "I3_1")))
    thresholds = tuple(_as_list(cfg.get("s0_threshold", DEFAULT_S0_THRESHOLD), float))
    return RunOptions(
        observables=observables,
        s0_thresholds=thresholds,
        initial_state=cfg.get("initial_state", "random_basis"),
        average_last=int(cfg.get("average_last", 1)),
        workers=max(1, args.threads),
        record_timeseries=record_timeseries,
    )


def cmd_sweep(args):
    cfg = _apply_overrides(load_config(args.config, _SWEEP_KEYS), args)
    grid = _sweep_grid(cfg)
    options = _sweep_options(cfg, args, record_timeseries=args.timeseries)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    master_seed = int(cfg["seed"])
    summaries = []
    t_start = time.time()
    for i, cell in enumerate(grid):
        t0 = time.time()
        summaries.extend(sweep([cell], cfg["n_traj"], options, master_seed))
        _log(
            f"[{i + 1}/{len(grid)}] {cell.variant.value} L={cell.L} "
            f"p_ctrl={cell.p_ctrl:g} done in {time.time() - t0:.1f}s"
        )
    _log(f"sweep finished in {time.time() - t_start:.1f}s")

    paths = [
        io.write_summary_csv(out / "summary.csv", summaries),
        io.write_raw_csv(out / "raw.csv", summaries),
    ]
    if args.timeseries:
        paths.append(io.write_timeseries_csv(out / "timeseries.csv", summaries))
    manifest = {
        "command": "sweep",
        "master_seed": master_seed,
        "config": _resolved_sweep_config(cfg, options),
        "cell_seeds": {
            f"{c.variant.value}|L={c.L}|p_ctrl={c.p_ctrl:g}": derive_cell_seed(master_seed, c)
            for c in grid
        },
        "outputs": [str(p) for p in paths],
    }
    paths.append(io.write_manifest(out / "manifest.json", manifest))
    for p in paths:
        print(p)
    return 0


def _resolved_sweep_config(cfg, options):
    return {
        "variant": cfg["variant"],
        "L": _as_list(cfg["L"], int),
        "p_ctrl_grid": _as_list(cfg["p_ctrl_grid"], float),
        "p_proj": float(cfg.get("p_proj", 0.0)),
        "p_global": float(cfg.get("p_global", 0.0)),
        "steps": cfg.get("steps"),
        "n_traj": int(cfg["n_traj"]),
        "seed": int(cfg["seed"]),
        "observables": list(options.observables),
        "s0_threshold": list(options.s0_thresholds),
        "initial_state": options.initial_state,
        "average_last": options.average_last,
    }


def cmd_classical(args):
    cfg = _apply_overrides(load_config(args.config, _CLASSICAL_KEYS), args)
    L_list = _as_list(_require(cfg, "L"), int)
    p_grid = _as_list(_require(cfg, "p_ctrl_grid"), float)
    n_traj = int(_require(cfg, "n_traj"))
    seed = int(_require(cfg, "seed"))
    target = cfg.get("target", "afm")
    steps = cfg.get("steps")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    observable = f"classical_O_{target.upper()}"
    rows_summary, rows_raw = [], []
    for L in L_list:
        t0 = time.time()
        pts = classical_transition_scan(
            L, p_grid, n_traj, steps=steps, seed=seed, target=target
        )
        _log(f"classical L={L} done in {time.time() - t0:.1f}s")
        for pt in pts:
            cell = ["classical", L, io.fmt(pt.p), io.fmt(0.0), io.fmt(0.0),
                    steps if steps is not None else 2 * L * L]
            rows_summary.append(cell + [n_traj, observable, io.fmt(pt.mean), io.fmt(pt.sem)])
            for i, v in enumerate(pt.samples):
                rows_raw.append(cell + [i, observable, io.fmt(v)])

    import csv as _csv
    summary_path, raw_path = out / "summary.csv", out / "raw.csv"
    with open(summary_path, "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(io.SUMMARY_COLUMNS)
        w.writerows(rows_summary)
    with open(raw_path, "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(io.RAW_COLUMNS)
        w.writerows(rows_raw)
    manifest = {
        "command": "classical",
        "master_seed": seed,
        "config": {
            "L": L_list, "p_ctrl_grid": p_grid, "n_traj": n_traj,
            "seed": seed, "steps": steps, "target": target,
        },
        "outputs": [str(summary_path), str(raw_path)],
    }
    manifest_path = io.write_manifest(out / "manifest.json", manifest)
    for p in (summary_path, raw_path, manifest_path):
        print(p)
    return 0


def cmd_collapse(args):
    table = io.read_raw_csv(args.raw)
    L_values = set(_csv_ints(args.L)) if args.L else None
    points = io.collapse_points_from_raw(
        table, args.observable, args.p_min, args.p_max,
        L_min=args.L_min, L_values=L_values,
    )
    bounds = ((args.p_min, args.p_max), (args.nu_min, args.nu_max))
    multi = [tuple(float(x) for x in m.split(":")) for m in args.multi_start or []]
    fit = scaling.fit_collapse(
        points, args.init_pc, args.init_nu, bounds=bounds, multi_start=multi
    )
    if args.bootstrap > 0:
        boot = scaling.bootstrap_errors(
            points, fit, n_resamples=args.bootstrap, seed=args.bootstrap_seed
        )
        fit = scaling.finalize_errors(fit, boot, args.bootstrap)
    payload = {
        "observable": args.observable,
        "p_c": fit.p_c, "nu": fit.nu,
        "err_p_c": fit.err_p_c, "err_nu": fit.err_nu,
        "chi2_reduced": fit.chi2_reduced,
        "n_points": fit.n_points,
        "k_params": fit.n_params,
        "n_bootstrap": fit.n_bootstrap,
        "pinned": fit.pinned,
        "hessian_err": list(fit.hessian_err),
        "bootstrap_err": list(fit.bootstrap_err) if fit.bootstrap_err else None,
        "alternates": [list(a) for a in fit.alternates],
        "window": {
            "p_min": args.p_min, "p_max": args.p_max,
            "L_min": args.L_min,
            "L": sorted(L_values) if L_values else None,
        },
    }
    out = io.write_fit_json(args.out, payload)
    print(out)
    if args.collapsed:
        print(io.write_collapsed_csv(args.collapsed, points, fit.p_c, fit.nu))
    return 0


def _record_times_for(steps, dense_until, record_every):
    times = set(range(1, min(dense_until, steps) + 1))
    times.update(range(record_every, steps + 1, record_every))
    times.add(steps)
    return tuple(sorted(times))


def cmd_timeseries(args):
    cfg = _apply_overrides(load_config(args.config, _TIMESERIES_KEYS), args)
    variant = _parse_variant(_require(cfg, "variant"))
    L_list = _as_list(_require(cfg, "L"), int)
    n_traj = int(_require(cfg, "n_traj"))
    seed = int(_require(cfg, "seed"))
    record_every = int(cfg.get("record_every", 1))
    dense_until = int(cfg.get("dense_until", 0))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    summaries = []
    series = []
    for L in L_list:
        steps = cfg.get("steps")
        config = ModelConfig(
            variant=variant, L=L, p_ctrl=float(_require(cfg, "p_ctrl")),
            p_proj=float(cfg.get("p_proj", 0.0)),
            p_global=float(cfg.get("p_global", 0.0)),
            steps=int(steps) if steps is not None else None,
            seed=0,
        )
        config = dataclasses.replace(config, seed=derive_cell_seed(seed, config))
        options = RunOptions(
            observables=("S_half",),
            initial_state=cfg.get("initial_state", "random_basis"),
            workers=max(1, args.threads),
            record_timeseries=True,
            record_times=_record_times_for(config.steps, dense_until, record_every),
        )
        t0 = time.time()
        summary = run_ensemble(config, n_traj, options)
        _log(f"timeseries L={L} steps={config.steps} done in {time.time() - t0:.1f}s")
        summaries.append(summary)
        ts = summary.timeseries
        series.append((L, ts.times, ts.samples))

    paths = [io.write_timeseries_csv(out / "timeseries.csv", summaries)]
    zfit_payload = None
    if args.fit_z:
        fit = scaling.fit_dynamical_exponent(
            series, window=args.window, initial_z=args.init_z,
            n_bootstrap=args.z_bootstrap, seed=args.bootstrap_seed,
        )
        zfit_payload = {
            "z": fit.z, "err_z": fit.err_z,
            "chi2_reduced": fit.chi2_reduced,
            "n_points": fit.n_points, "k_params": fit.n_params,
            "n_bootstrap": fit.n_bootstrap,
            "window": args.window,
        }
        paths.append(io.write_fit_json(out / "zfit.json", zfit_payload))
    manifest = {
        "command": "timeseries",
        "master_seed": seed,
        "config": {
            "variant": cfg["variant"], "L": L_list,
            "p_ctrl": float(cfg["p_ctrl"]),
            "p_proj": float(cfg.get("p_proj", 0.0)),
            "p_global": float(cfg.get("p_global", 0.0)),
            "steps": cfg.get("steps"), "n_traj": n_traj, "seed": seed,
            "initial_state": cfg.get("initial_state", "random_basis"),
            "record_every": record_every, "dense_until": dense_until,
        },
        "zfit": zfit_payload,
        "outputs": [str(p) for p in paths],
    }
    paths.append(io.write_manifest(out / "manifest.json", manifest))
    for p in paths:
        print(p)
    return 0


def build_parser():
    parser = _Parser(prog="qbernoulli")
    sub = parser.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="run a p_ctrl sweep and persist tables")
    sw.add_argument("--config", required=True)
    sw.add_argument("--out-dir", default="runs/sweep")
    sw.add_argument("--p-ctrl", help="override p_ctrl_grid, comma separated")
    sw.add_argument("--L", help="override L list, comma separated")
    sw.add_argument("--traj", type=int, help="override n_traj")
    sw.add_argument("--seed", type=int, help="override master seed")
    sw.add_argument("--threads", type=int, default=1)
    sw.add_argument("--s0-threshold", help="comma separated thresholds for I3_0")
    sw.add_argument("--timeseries", action="store_true",
                    help="record per-step half-cut entropy")
    sw.set_defaults(func=cmd_sweep)

    cl = sub.add_parser("classical", help="classical control-transition scan")
    cl.add_argument("--config", required=True)
    cl.add_argument("--out-dir", default="runs/classical")
    cl.add_argument("--p-ctrl", help="override p_ctrl_grid, comma separated")
    cl.add_argument("--L", help="override L list, comma separated")
    cl.add_argument("--traj", type=int)
    cl.add_argument("--seed", type=int)
    cl.set_defaults(func=cmd_classical)

    co = sub.add_parser("collapse", help="finite-size data collapse of raw samples")
    co.add_argument("--raw", required=True, help="raw-samples CSV from a sweep")
    co.add_argument("--observable", required=True)
    co.add_argument("--p-min", type=float, required=True)
    co.add_argument("--p-max", type=float, required=True)
    co.add_argument("--L-min", type=int, default=0)
    co.add_argument("--L", help="restrict to these L values, comma separated")
    co.add_argument("--init-pc", type=float, required=True)
    co.add_argument("--init-nu", type=float, required=True)
    co.add_argument("--nu-min", type=float, default=0.3)
    co.add_argument("--nu-max", type=float, default=3.0)
    co.add_argument("--multi-start", action="append",
                    help="extra initial guess 'pc:nu' (repeatable)")
    co.add_argument("--bootstrap", type=int, default=0)
    co.add_argument("--bootstrap-seed", type=int, default=0)
    co.add_argument("--out", default="fit.json")
    co.add_argument("--collapsed", help="also write the rescaled table here")
    co.set_defaults(func=cmd_collapse)

    ts = sub.add_parser("timeseries", help="half-cut entropy growth curves")
    ts.add_argument("--config", required=True)
    ts.add_argument("--out-dir", default="runs/timeseries")
    ts.add_argument("--traj", type=int)
    ts.add_argument("--seed", type=int)
    ts.add_argument("--threads", type=int, default=1)
    ts.add_argument("--fit-z", action="store_true")
    ts.add_argument("--window", type=float, default=1.0,
                    help="early-time fraction of each series used in the z fit")
    ts.add_argument("--init-z", type=float, default=1.5)
    ts.add_argument("--z-bootstrap", type=int, default=0)
    ts.add_argument("--bootstrap-seed", type=int, default=0)
    ts.set_defaults(func=cmd_timeseries)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        _log(f"config error: {exc}")
        return 1
    except NumericalCorruptionError as exc:
        _log(f"numerical corruption: {exc}")
        return 2
    except FitConvergenceError as exc:
        _log(f"fit did not converge: {exc}")
        return 3
    except QBernoulliError as exc:
        _log(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
