"""CSV/JSON persistence with bit-exact reproducibility.

Floats are written with 17 significant digits (round-trip exact for
float64), columns are in fixed order, and rows follow the grid order, so
rerunning an identical manifest yields byte-identical data files.
"""

import csv
import json
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .scaling import CollapsePoint

SUMMARY_COLUMNS = (
    "variant", "L", "p_ctrl", "p_proj", "p_global", "steps",
    "n_traj", "observable", "mean", "sem",
)
RAW_COLUMNS = (
    "variant", "L", "p_ctrl", "p_proj", "p_global", "steps",
    "traj_index", "observable", "value",
)
TIMESERIES_COLUMNS = ("variant", "L", "p_ctrl", "p_proj", "t", "mean", "sem")


def fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _cell_fields(config):
    return [
        config.variant.value, config.L, fmt(config.p_ctrl), fmt(config.p_proj),
        fmt(config.p_global), config.steps,
    ]


def write_summary_csv(path, summaries):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        for s in summaries:
            for name in sorted(s.stats):
                st = s.stats[name]
                w.writerow(
                    _cell_fields(s.config)
                    + [s.n_traj, name, fmt(st.mean), fmt(st.sem)]
                )
    return path


def write_raw_csv(path, summaries):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RAW_COLUMNS)
        for s in summaries:
            for name in sorted(s.stats):
                samples = s.stats[name].samples
                if samples is None:
                    continue
                cell = _cell_fields(s.config)
                for i, v in enumerate(samples):
                    w.writerow(cell + [i, name, fmt(v)])
    return path


def write_timeseries_csv(path, summaries):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TIMESERIES_COLUMNS)
        for s in summaries:
            ts = s.timeseries
            mean, sem = ts.mean(), ts.sem()
            head = [
                s.config.variant.value, s.config.L,
                fmt(s.config.p_ctrl), fmt(s.config.p_proj),
            ]
            for i, t in enumerate(ts.times):
                w.writerow(head + [int(t), fmt(mean[i]), fmt(sem[i])])
    return path


def read_raw_csv(path):
    """Group a raw-samples CSV into {observable: {(L, p_ctrl): [values]}}."""
    table = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(RAW_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"raw CSV missing columns: {sorted(missing)}")
        for row in reader:
            key = (int(row["L"]), float(row["p_ctrl"]))
            table.setdefault(row["observable"], {}).setdefault(key, []).append(
                float(row["value"])
            )
    return table


def collapse_points_from_raw(table, observable, p_min, p_max, L_min=0, L_values=None):
    """Build CollapsePoints for one observable inside a (p, L) window."""
    if observable not in table:
        raise ValueError(
            f"observable {observable!r} not in raw data; "
            f"available: {sorted(table)}"
        )
    points = []
    for (L, p), values in sorted(table[observable].items()):
        if L < L_min or not p_min <= p <= p_max:
            continue
        if L_values is not None and L not in L_values:
            continue
        points.append(CollapsePoint.from_samples(p, L, np.asarray(values)))
    if not points:
        raise ValueError("window selects no data points")
    if len({pt.L for pt in points}) < 2:
        raise ValueError("window keeps a single system size; cannot collapse")
    return points


def write_manifest(path, payload):
    payload = dict(payload)
    payload["code_version"] = __version__
    payload["created_utc"] = datetime.now(timezone.utc).isoformat()
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def write_fit_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def write_collapsed_csv(path, points, p_c, nu):
    """The rescaled (x, y, sigma) table of a collapse, for plotting."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("x", "y", "sem", "p", "L"))
        rows = sorted(
            (((pt.p - p_c) * pt.L ** (1.0 / nu)), pt.mean, pt.sem, pt.p, pt.L)
            for pt in points
        )
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")
