"""Experiment harness: feature-model and network sweeps, summaries, results.

Sweeps are pure functions of their :class:`~descentlab.config.SweepConfig`.
Per-point random streams are derived from the master seed and the point's
grid coordinates, so fanning work out to processes cannot change a result;
rows are always emitted in grid order.
"""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import mlp
from .config import FEATURE_EXPERIMENTS, NN_EXPERIMENTS, ConfigError, data_dir
from .data import load_dataset, load_mnist_idx, subsample_and_split, synth_gaussian_classes
from .errors import EmptyInput
from .features import make_feature_map, transform
from .records import CurvePoint, feature_num_params, mlp_num_params, write_points
from .rng import derive_seed
from .solver import RidgeProblem, anchored_ridge_solve, evaluate, sample_anchor

log = logging.getLogger(__name__)


# ----------------------------------------------------------------------------
# datasets and grids


def build_dataset(cfg):
    if cfg.data_source == "synthetic":
        K = cfg.synth_classes
        per_class = cfg.synth_per_class or math.ceil((cfg.n_train + cfg.n_test) / K)
        ds = synth_gaussian_classes(cfg.data_seed, per_class, K, cfg.synth_inputs, cfg.synth_center_scale)
    elif cfg.data_source == "mnist":
        images = Path(cfg.mnist_images) if cfg.mnist_images else _find(data_dir(), "train-images-idx3-ubyte")
        labels = Path(cfg.mnist_labels) if cfg.mnist_labels else _find(data_dir(), "train-labels-idx1-ubyte")
        ds = load_mnist_idx(images, labels)
    else:
        if not cfg.cache_path:
            raise ConfigError("data_source = cache needs cache_path")
        ds = load_dataset(cfg.cache_path)
        if ds.n_train and ds.n_train == cfg.n_train and ds.n_test == cfg.n_test:
            return ds
    return subsample_and_split(ds, cfg.data_seed, cfg.n_train, cfg.n_test, balanced=cfg.balanced)


def _find(root, stem):
    for name in (stem, stem + ".gz"):
        if (root / name).exists():
            return root / name
    raise ConfigError(f"MNIST file {stem} not found in {root}; run `descentlab fetch-data` or set mnist_images")


def default_feature_grid(n, lo=10, hi=None, num=20, band=0.2, dense=9):
    """Geometric grid from ``lo`` to ``hi`` (default ``3n``), densified
    linearly within ``+-band`` of the interpolation point ``D = n``."""
    hi = 3 * n if hi is None else hi
    geo = np.geomspace(max(lo, 1), max(hi, 1), num)
    near = np.linspace((1 - band) * n, (1 + band) * n, dense)
    grid = np.concatenate([geo, near, [n - 1, n]])
    grid = np.unique(np.rint(grid).astype(int))
    return [int(d) for d in grid if lo <= d <= hi]


def capacity_grid(cfg, dataset):
    if cfg.capacity_grid != ("auto",):
        return [int(c) for c in cfg.capacity_grid]
    if cfg.experiment in FEATURE_EXPERIMENTS:
        return default_feature_grid(dataset.n_train)
    return list(range(2, 61, 2))


# ----------------------------------------------------------------------------
# feature-model sweeps


def _repeat_features(cfg, dataset, grid, repeat):
    fseed = derive_seed(cfg.seed, "features", repeat)
    fm = make_feature_map(
        fseed, dataset.n_inputs, max(grid), include_bias=cfg.include_bias,
        feature_scale=cfg.feature_scale, center_rows=cfg.center_rows,
    )
    Xtr, Ztr, ytr = dataset.train()
    Xte, Zte, yte = dataset.test()
    return fseed, fm, (transform(fm, Xtr), Ztr, ytr), (transform(fm, Xte), Zte, yte)


def _columns(phi, D, include_bias):
    # nested map: the D-feature matrix is the first D columns plus the bias
    if include_bias:
        return np.concatenate([phi[:, :D], phi[:, -1:]], axis=1)
    return phi[:, :D]


def lambda_scale(cfg, dataset):
    """Mean eigenvalue of the train kernel ``Phi Phi^T`` at the largest
    capacity, for ``lambda_relative`` grids."""
    grid = capacity_grid(cfg, dataset)
    _, _, (phi, _, _), _ = _repeat_features(cfg, dataset, grid, 0)
    return float(np.sum(phi * phi) / max(phi.shape[0], 1))


def reference_norm(cfg, dataset, lam):
    """Mean per-output weight norm of the unanchored solution at the largest
    capacity (repeat 0), the unit of ``r_relative`` grids."""
    grid = capacity_grid(cfg, dataset)
    _, _, (phi, Z, _), _ = _repeat_features(cfg, dataset, grid, 0)
    res = anchored_ridge_solve(RidgeProblem(phi, Z, lam))
    return float(np.mean(res.per_output_norms))


def _feature_repeat(cfg, dataset, grid, lams, Rs, repeat):
    fseed, fm, (phi_tr, Ztr, ytr), (phi_te, Zte, yte) = _repeat_features(cfg, dataset, grid, repeat)
    K = dataset.num_classes
    out = {}
    for li, lam in enumerate(lams):
        for ri, R in enumerate(Rs):
            for D in grid:
                t0 = time.perf_counter()
                nparams = feature_num_params(D, K, cfg.include_bias)
                try:
                    ptr = _columns(phi_tr, D, cfg.include_bias)
                    pte = _columns(phi_te, D, cfg.include_bias)
                    M = ptr.shape[1]
                    aseed = derive_seed(cfg.seed, cfg.experiment, D, li, ri, repeat)
                    if cfg.include_bias and not cfg.anchor_bias:
                        anchor = np.zeros((M, K))
                        anchor[:-1] = sample_anchor(aseed, M - 1, K, R, cfg.anchor_per_column)
                    else:
                        anchor = sample_anchor(aseed, M, K, R, cfg.anchor_per_column)
                    res = anchored_ridge_solve(RidgeProblem(ptr, Ztr, lam, anchor))
                    tr = evaluate(res.W, ptr, Ztr, ytr)
                    te = evaluate(res.W, pte, Zte, yte)
                    point = CurvePoint(
                        cfg.experiment, fseed, D, nparams, float(lam), float(R),
                        tr["mse"], te["mse"], tr["error_rate"], te["error_rate"], res.weight_l2,
                        None, (time.perf_counter() - t0) * 1e3,
                    )
                except Exception as exc:  # recorded, never dropped
                    log.warning("point D=%d lambda=%g R=%g repeat=%d failed: %s", D, lam, R, repeat, exc)
                    point = CurvePoint.failed(cfg.experiment, fseed, D, nparams, float(lam), float(R),
                                              f"{type(exc).__name__}: {exc}")
                out[(li, ri, D)] = point
    return out


def _resolved_grids(cfg, dataset):
    lams = list(cfg.lambda_grid)
    if cfg.lambda_relative:
        scale = lambda_scale(cfg, dataset)
        lams = [lam * scale for lam in lams]
    Rs = list(cfg.r_grid)
    if cfg.r_relative:
        ref = reference_norm(cfg, dataset, lams[0])
        Rs = [r * ref for r in Rs]
    return lams, Rs


def _map(fn, tasks, jobs):
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, *zip(*tasks)))
    return [fn(*t) for t in tasks]


def run_feature_sweep(cfg, dataset=None, jobs=1):
    """One CurvePoint per (lambda, R, D, repeat), in that nesting order."""
    if cfg.experiment not in FEATURE_EXPERIMENTS:
        raise ConfigError(f"run_feature_sweep cannot run {cfg.experiment}")
    dataset = build_dataset(cfg) if dataset is None else dataset
    grid = capacity_grid(cfg, dataset)
    lams, Rs = _resolved_grids(cfg, dataset)
    tasks = [(cfg, dataset, grid, lams, Rs, r) for r in range(cfg.repeats)]
    per_repeat = _map(_feature_repeat, tasks, jobs)
    return [
        per_repeat[r][(li, ri, D)]
        for li in range(len(lams)) for ri in range(len(Rs)) for D in grid for r in range(cfg.repeats)
    ]


# ----------------------------------------------------------------------------
# network sweeps


def train_config(cfg, seed):
    return mlp.TrainConfig(
        learning_rate=cfg.learning_rate, batch_size=cfg.batch_size, max_epochs=cfg.max_epochs,
        patience=cfg.patience, val_fraction=cfg.val_fraction, seed=seed, early_stop=cfg.early_stopping(),
    )


def _reuse_chain(cfg, dataset, grid, repeat):
    seed = derive_seed(cfg.seed, cfg.experiment, repeat)
    try:
        runs = mlp.reuse_sweep(dataset, grid, cfg.switch_off(), train_config(cfg, seed),
                               init_scale=cfg.init_scale, seed=seed, experiment=cfg.experiment)
        return [r.point for r in runs]
    except Exception as exc:
        log.warning("reuse chain repeat=%d failed: %s", repeat, exc)
        return [_nn_failure(cfg, dataset, h, seed, exc) for h in grid]


def _scratch_point(cfg, dataset, h, repeat):
    seed = derive_seed(cfg.seed, cfg.experiment, h, 0, 0, repeat)
    try:
        return mlp.train_point(dataset, h, train_config(cfg, seed), cfg.init_scale, seed, cfg.experiment).point
    except Exception as exc:
        log.warning("network h=%d repeat=%d failed: %s", h, repeat, exc)
        return _nn_failure(cfg, dataset, h, seed, exc)


def _nn_failure(cfg, dataset, h, seed, exc):
    nparams = mlp_num_params(dataset.n_inputs, h, dataset.num_classes)
    return CurvePoint.failed(cfg.experiment, seed, h, nparams, 0.0, 0.0, f"{type(exc).__name__}: {exc}")


def run_nn_sweep(cfg, dataset=None, jobs=1):
    """Reuse chains (one per repeat) or independent from-scratch networks.

    Rows are ordered by (h, repeat).
    """
    if cfg.experiment not in NN_EXPERIMENTS:
        raise ConfigError(f"run_nn_sweep cannot run {cfg.experiment}")
    dataset = build_dataset(cfg) if dataset is None else dataset
    grid = capacity_grid(cfg, dataset)
    if cfg.experiment == "NnReuseSweep":
        chains = _map(_reuse_chain, [(cfg, dataset, grid, r) for r in range(cfg.repeats)], jobs)
        return [chains[r][i] for i in range(len(grid)) for r in range(cfg.repeats)]
    tasks = [(cfg, dataset, h, r) for h in grid for r in range(cfg.repeats)]
    return _map(_scratch_point, tasks, jobs)


def run_sweep(cfg, dataset=None, jobs=1):
    if cfg.experiment in FEATURE_EXPERIMENTS:
        return run_feature_sweep(cfg, dataset, jobs)
    return run_nn_sweep(cfg, dataset, jobs)


# ----------------------------------------------------------------------------
# summaries


@dataclass(frozen=True)
class Summary:
    peak_capacity: int
    peak_test_mse: float
    tail_test_mse: float
    second_descent_ratio: float
    largest_drop_capacity: int | None
    capacities: tuple
    mean_test_mse: tuple
    mean_train_mse: tuple

    def as_dict(self):
        return {
            "peak_capacity": self.peak_capacity,
            "peak_test_mse": self.peak_test_mse,
            "tail_test_mse": self.tail_test_mse,
            "second_descent_ratio": self.second_descent_ratio,
            "largest_drop_capacity": self.largest_drop_capacity,
        }


def mean_curve(points, metric="test_mse"):
    """Average ``metric`` over repeats per capacity; failed points are skipped."""
    by_cap = {}
    for p in points:
        if p.ok:
            by_cap.setdefault(p.capacity, []).append(getattr(p, metric))
    caps = sorted(by_cap)
    return caps, [float(np.mean(by_cap[c])) for c in caps]


def summarize(points):
    """Peak, tail and drop statistics of one (experiment, lambda, R) cell.

    The peak is the largest mean test MSE over interior capacities (the
    endpoints are excluded when there are at least three), the tail is the
    mean at the largest capacity, and ``largest_drop_capacity`` is the
    capacity reached by the steepest decrease between consecutive grid
    points.
    """
    points = list(points)
    if not points:
        raise EmptyInput("summarize needs at least one point")
    cells = {(p.experiment, p.lam, p.R) for p in points}
    if len(cells) > 1:
        raise ValueError(f"points span several cells: {sorted(cells)}")
    caps, test = mean_curve(points, "test_mse")
    if not caps:
        raise EmptyInput("every point in the cell failed")
    _, train = mean_curve(points, "train_mse")
    interior = range(1, len(caps) - 1) if len(caps) >= 3 else range(len(caps))
    peak = max(interior, key=lambda i: (test[i], -i))
    tail = test[-1]
    drops = [test[i] - test[i + 1] for i in range(len(caps) - 1)]
    drop = caps[int(np.argmax(drops)) + 1] if drops else None
    return Summary(
        peak_capacity=caps[peak],
        peak_test_mse=test[peak],
        tail_test_mse=tail,
        second_descent_ratio=test[peak] / tail if tail > 0 else math.inf,
        largest_drop_capacity=drop,
        capacities=tuple(caps),
        mean_test_mse=tuple(test),
        mean_train_mse=tuple(train),
    )


def cells(points):
    """Group points by (lambda, R) cell, in first-appearance order."""
    out = {}
    for p in points:
        out.setdefault((p.lam, p.R), []).append(p)
    return out


def threshold_params(dataset):
    """The N x K parameter count where the linear output layer starts to
    interpolate."""
    return dataset.n_train * dataset.num_classes


def write_results(cfg, points, out_dir, dataset=None):
    """Write ``<experiment>-<config digest>.csv`` and its ``.summary.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{cfg.experiment}-{cfg.digest()}"
    csv_path = out_dir / f"{stem}.csv"
    write_points(csv_path, points)
    summary = {"experiment": cfg.experiment, "config_digest": cfg.digest(), "cells": []}
    if dataset is not None:
        summary.update(n_train=dataset.n_train, num_classes=dataset.num_classes,
                       threshold_params=threshold_params(dataset))
    for (lam, R), pts in cells(points).items():
        entry = {"lambda": lam, "R": R, "points": len(pts), "failed": sum(not p.ok for p in pts)}
        try:
            entry.update(summarize(pts).as_dict())
        except EmptyInput as exc:
            entry["error"] = str(exc)
        summary["cells"].append(entry)
    json_path = out_dir / f"{stem}.summary.json"
    json_path.write_text(json.dumps(summary, indent=2, allow_nan=True) + "\n")
    return csv_path, json_path
