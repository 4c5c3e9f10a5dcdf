"""Turn a results CSV into a gnuplot script plus a normalized data file.

Nothing here draws anything.  ``emit_plot_script("runs/x.csv")`` writes
``runs/x.plot.csv`` (repeat-averaged curves, one row per cell and
capacity) and ``runs/x.gnuplot``, which renders one PNG per (lambda, R)
cell: train and test MSE against parameter count on log axes, with a
vertical line at the N x K interpolation threshold.
"""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

from .records import read_points
from .sweep import cells, mean_curve

log = logging.getLogger(__name__)

PLOT_COLUMNS = ("cell", "lambda", "R", "capacity", "num_params", "train_mse", "test_mse", "repeats")

# train MSE at or below this counts as interpolating when the threshold has
# to be inferred from the curve itself
_INTERP_TOL = 1e-6


def _summary_threshold(csv_path):
    path = csv_path.with_name(csv_path.stem + ".summary.json")
    if not path.exists():
        return None
    try:
        return json.loads(path.read_text()).get("threshold_params")
    except (OSError, ValueError):
        return None


def _inferred_threshold(rows):
    """num_params at the first capacity whose mean train MSE interpolates,
    for cells that reach interpolation at all."""
    for r in rows:
        if r["train_mse"] <= _INTERP_TOL:
            return r["num_params"]
    return None


def normalized_rows(points):
    """Average over repeats per (cell, capacity); failed points are skipped."""
    out = []
    for i, ((lam, R), pts) in enumerate(cells(points).items()):
        caps, test = mean_curve(pts, "test_mse")
        _, train = mean_curve(pts, "train_mse")
        nparams = {p.capacity: p.num_params for p in pts}
        count = {}
        for p in pts:
            if p.ok:
                count[p.capacity] = count.get(p.capacity, 0) + 1
        for c, tr, te in zip(caps, train, test):
            out.append({
                "cell": i, "lambda": lam, "R": R, "capacity": c, "num_params": nparams[c],
                "train_mse": tr, "test_mse": te, "repeats": count[c],
            })
    return out


def emit_plot_script(csv_path, threshold=None, out_dir=None):
    """Write ``<stem>.gnuplot`` and ``<stem>.plot.csv``; return the script path.

    ``threshold`` is the N x K parameter count.  When omitted it is read from
    the companion ``<stem>.summary.json``, or else taken per cell as the
    first interpolating parameter count.  Raises SchemaMismatch when the
    CSV does not carry the CurvePoint columns.
    """
    csv_path = Path(csv_path)
    points = read_points(csv_path)
    out_dir = csv_path.parent if out_dir is None else Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = csv_path.stem
    data_path = out_dir / f"{stem}.plot.csv"
    script_path = out_dir / f"{stem}.gnuplot"

    rows = normalized_rows(points)
    with open(data_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PLOT_COLUMNS)
        for r in rows:
            w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in PLOT_COLUMNS])

    if threshold is None:
        threshold = _summary_threshold(csv_path)

    lines = [
        f"# error vs parameter count for {csv_path.name}",
        f"# data: {data_path.name} (columns: {', '.join(PLOT_COLUMNS)})",
        "set datafile separator ','",
        "set terminal pngcairo size 900,600",
        "set logscale xy",
        "set xlabel 'number of parameters'",
        "set ylabel 'squared error'",
        "set key top right",
        "set grid",
    ]
    by_cell = {}
    for r in rows:
        by_cell.setdefault(r["cell"], []).append(r)
    if not by_cell:
        log.warning("%s has no data rows; the plot script contains no series", csv_path)
        lines.append("# no data rows: nothing to plot")
    experiment = points[0].experiment if points else ""
    for i, cell_rows in by_cell.items():
        lam, R = cell_rows[0]["lambda"], cell_rows[0]["R"]
        cut = threshold if threshold is not None else _inferred_threshold(cell_rows)
        sel = f"(strcol(1) eq '{i}' ? ${{col}} : NaN)"
        lines += [
            "",
            f"set output '{stem}-cell{i}.png'",
            f"set title '{experiment}  lambda={lam:g}  R={R:g}' noenhanced",
            "unset arrow",
        ]
        if cut is not None:
            lines.append(f"set arrow from {cut},graph 0 to {cut},graph 1 nohead dashtype 2 lc rgb 'gray40'")
        lines.append(
            f"plot '{data_path.name}' skip 1 using 5:{sel.format(col=7)} with linespoints title 'test', \\\n"
            f"     '' skip 1 using 5:{sel.format(col=6)} with linespoints title 'train'"
        )
    lines.append("unset output")
    script_path.write_text("\n".join(lines) + "\n")
    return script_path
