"""One-hidden-layer ReLU network trained by mini-batch SGD on squared error.

Includes the weight-reuse growth protocol: a trained width-``h`` network
seeds the next width by keeping every trained weight and adding freshly
initialized neurons, until a configurable switch-off width after which
networks start from scratch.
"""

from __future__ import annotations

import csv
import enum
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, NonFiniteValue, ShrinkNotAllowed
from .records import CurvePoint, mlp_num_params
from .rng import derive_seed, stream


class StopReason(enum.Enum):
    EarlyStopped = "EarlyStopped"
    EpochCap = "EpochCap"


@dataclass(frozen=True, eq=False)
class MlpState:
    W1: np.ndarray  # h x P
    b1: np.ndarray  # h
    W2: np.ndarray  # K x h
    b2: np.ndarray  # K
    init_scale: float = 1.0
    total_epochs_trained: int = 0
    stop_reason: StopReason | None = None

    def __post_init__(self):
        h, P = self.W1.shape
        if self.b1.shape != (h,) or self.W2.shape[1] != h or self.b2.shape != (self.W2.shape[0],):
            raise DimensionMismatch(
                f"inconsistent layer shapes W1 {self.W1.shape}, b1 {self.b1.shape}, "
                f"W2 {self.W2.shape}, b2 {self.b2.shape}"
            )
        for name in ("W1", "b1", "W2", "b2"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise NonFiniteValue(f"{name} contains NaN or Inf")

    @property
    def h(self):
        return self.W1.shape[0]

    @property
    def n_inputs(self):
        return self.W1.shape[1]

    @property
    def n_outputs(self):
        return self.W2.shape[0]

    @property
    def num_params(self):
        return mlp_num_params(self.n_inputs, self.h, self.n_outputs)

    def layer_norms(self):
        return float(np.linalg.norm(self.W1)), float(np.linalg.norm(self.W2))

    def weight_l2(self):
        n1, n2 = self.layer_norms()
        return float(np.hypot(n1, n2))

    def copy(self, **changes):
        arrays = {k: getattr(self, k).copy() for k in ("W1", "b1", "W2", "b2")}
        arrays.update(changes)
        return replace(self, **arrays)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    batch_size: int = 32
    max_epochs: int = 500
    patience: int = 20
    val_fraction: float = 0.1
    seed: int = 0
    early_stop: bool = False

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 0:
            raise ValueError(f"max_epochs must be >= 0, got {self.max_epochs}")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError(f"val_fraction must lie in (0, 1), got {self.val_fraction}")
        if self.early_stop and self.patience < 1:
            raise ValueError("patience must be >= 1 when early stopping")


def _neuron(seed, j, P, K, init_scale, fan_in_out):
    rng = stream(seed, "neuron", j)
    w_in = rng.standard_normal(P) * (init_scale / np.sqrt(P))
    w_out = rng.standard_normal(K) * (init_scale / np.sqrt(fan_in_out))
    return w_in, w_out


def init_mlp(seed, P, h, K, init_scale=1.0):
    """Gaussian weights with variance ``init_scale**2 / fan_in``, zero biases.

    Neuron ``j`` draws its incoming row and outgoing column from its own
    substream, so the first ``h`` neurons of a wider network share their
    input weights with the narrower one.
    """
    if not init_scale > 0:
        raise ValueError(f"init_scale must be > 0, got {init_scale}")
    W1 = np.zeros((h, P))
    W2 = np.zeros((K, h))
    for j in range(h):
        W1[j], W2[:, j] = _neuron(seed, j, P, K, init_scale, h)
    return MlpState(W1, np.zeros(h), W2, np.zeros(K), init_scale=float(init_scale))


# Hidden units are evaluated in zero-padded blocks of fixed width, and the
# blocks' output contributions are summed one after another.  Every matrix
# product then has the same shape whatever h is, so widening a network and
# zeroing the new output columns reproduces the old outputs bit-exactly.
_BLOCK = 64


def forward(state, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != state.n_inputs:
        raise DimensionMismatch(f"inputs {X.shape}, network expects {state.n_inputs} columns")
    n, P, K, h = X.shape[0], state.n_inputs, state.n_outputs, state.h
    out = np.empty((n, K))
    out[:] = state.b2
    W1 = np.zeros((_BLOCK, P))
    b1 = np.zeros(_BLOCK)
    W2 = np.zeros((K, _BLOCK))
    for start in range(0, h, _BLOCK):
        m = min(_BLOCK, h - start)
        W1[:m], W1[m:] = state.W1[start:start + m], 0.0
        b1[:m], b1[m:] = state.b1[start:start + m], 0.0
        W2[:, :m], W2[:, m:] = state.W2[:, start:start + m], 0.0
        pre = X @ W1.T
        pre += b1
        out += np.maximum(pre, 0.0, out=pre) @ W2.T
    if not np.all(np.isfinite(out)):
        raise NonFiniteValue("forward pass produced NaN or Inf")
    return out


def mse(state, X, Z):
    Z = np.asarray(Z, dtype=np.float64)
    if Z.shape[0] == 0:
        return 0.0
    d = forward(state, X) - Z
    return float(np.sum(d * d) / d.size)


def error_rate(state, X, labels):
    if len(labels) == 0:
        return 0.0
    return float(np.mean(np.argmax(forward(state, X), axis=1) != np.asarray(labels)))


def gradients(state, X, Z):
    """Full-batch gradients of ``sum((f(x) - z)**2) / (n * K)``.

    Returned as ``(gW1, gb1, gW2, gb2)``; used by the gradient check and
    mirrored by the batch kernels.
    """
    X = np.asarray(X, dtype=np.float64)
    Z = np.asarray(Z, dtype=np.float64)
    pre = X @ state.W1.T + state.b1
    act = np.maximum(pre, 0.0)
    out = act @ state.W2.T + state.b2
    g_out = (out - Z) * (2.0 / Z.size)
    g_pre = (g_out @ state.W2) * (pre > 0.0)
    return g_pre.T @ X, g_pre.sum(axis=0), g_out.T @ act, g_out.sum(axis=0)


def sgd_epoch(state, X, Z, cfg):
    """One shuffled pass of mini-batch SGD; returns ``(new_state, epoch_mse)``.

    ``epoch_mse`` averages the squared errors each batch saw before its
    update.  The shuffle is keyed by ``(cfg.seed, epochs trained so far)``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    Z = np.ascontiguousarray(Z, dtype=np.float64)
    n = X.shape[0]
    if X.shape[1] != state.n_inputs or Z.shape != (n, state.n_outputs):
        raise DimensionMismatch(f"X {X.shape}, Z {Z.shape} do not fit network ({state.n_inputs} -> {state.n_outputs})")
    if cfg.batch_size > n:
        raise ValueError(f"batch_size {cfg.batch_size} exceeds {n} training rows")
    order = stream(cfg.seed, "epoch", state.total_epochs_trained).permutation(n).astype(np.int64)
    new = state.copy()
    total = _kernels.sgd_epoch(new.W1, new.b1, new.W2, new.b2, X, Z, order, cfg.batch_size, float(cfg.learning_rate))
    if not np.isfinite(total) or not all(np.all(np.isfinite(a)) for a in (new.W1, new.b1, new.W2, new.b2)):
        raise NonFiniteValue(f"SGD diverged at learning_rate={cfg.learning_rate}")
    new = replace(new, total_epochs_trained=state.total_epochs_trained + 1)
    return new, total / Z.size


@dataclass
class TrainLog:
    epochs: list = field(default_factory=list)  # (epoch, train_mse, val_mse)
    best_epoch: int = 0
    epochs_run: int = 0
    W1_norm: float = 0.0
    W2_norm: float = 0.0

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("epoch", "train_mse", "val_mse"))
            for e, tr, va in self.epochs:
                w.writerow((e, repr(tr), repr(va)))


def fit(state, X, Z, X_val, Z_val, cfg):
    """Train on explicit arrays, with early stopping on ``(X_val, Z_val)``.

    With ``cfg.early_stop`` training halts once validation MSE has failed
    to strictly improve for ``cfg.patience`` consecutive epochs, and the
    best-validation weights are returned.  Otherwise every one of
    ``cfg.max_epochs`` epochs runs and the last weights are kept.
    """
    log = TrainLog()
    start_epochs = state.total_epochs_trained
    best, best_val, stale = None, np.inf, 0
    reason = StopReason.EpochCap
    for epoch in range(1, cfg.max_epochs + 1):
        state, tr = sgd_epoch(state, X, Z, cfg)
        va = mse(state, X_val, Z_val)
        log.epochs.append((epoch, tr, va))
        log.epochs_run = epoch
        if va < best_val:
            best, best_val, stale = state, va, 0
            log.best_epoch = epoch
        else:
            stale += 1
            if cfg.early_stop and stale >= cfg.patience:
                reason = StopReason.EarlyStopped
                break
    if not cfg.early_stop or best is None:
        log.best_epoch = log.epochs_run
    else:
        state = replace(best, total_epochs_trained=start_epochs + log.best_epoch)
    state = replace(state, stop_reason=reason)
    log.W1_norm, log.W2_norm = state.layer_norms()
    return state, log


def carve_validation(n, val_fraction, seed):
    """Split ``range(n)`` into (fit rows, validation rows), deterministically."""
    order = stream(seed, "validation").permutation(n)
    n_val = min(n - 1, max(1, int(round(val_fraction * n)))) if n > 1 else 0
    return np.sort(order[n_val:]), np.sort(order[:n_val])


def train(state, dataset, cfg):
    """Train on the dataset's train split; a validation slice is carved from it.

    The test split is never touched.
    """
    X, Z, _ = dataset.train()
    fit_rows, val_rows = carve_validation(X.shape[0], cfg.val_fraction, cfg.seed)
    return fit(state, X[fit_rows], Z[fit_rows], X[val_rows], Z[val_rows], cfg)


def grow_hidden(state, seed, new_h):
    """Widen to ``new_h`` neurons, keeping every existing weight bit-exact.

    New input rows use the same per-neuron streams as :func:`init_mlp`; new
    output columns are scaled for a layer of fan-in ``new_h``.
    """
    h = state.h
    if new_h < h:
        raise ShrinkNotAllowed(f"cannot shrink hidden layer from {h} to {new_h}")
    if new_h == h:
        return state.copy()
    P, K = state.n_inputs, state.n_outputs
    W1 = np.zeros((new_h, P))
    W2 = np.zeros((K, new_h))
    W1[:h] = state.W1
    W2[:, :h] = state.W2
    for j in range(h, new_h):
        W1[j], W2[:, j] = _neuron(seed, j, P, K, state.init_scale, new_h)
    b1 = np.concatenate([state.b1, np.zeros(new_h - h)])
    return replace(state, W1=W1, b1=b1, W2=W2, b2=state.b2.copy(), stop_reason=None)


@dataclass
class NnRun:
    point: CurvePoint
    log: TrainLog
    reused: bool


def _measure(state, dataset, log, experiment, seed, t0):
    Xtr, Ztr, ytr = dataset.train()
    Xte, Zte, yte = dataset.test()
    return CurvePoint(
        experiment=experiment,
        seed=seed,
        capacity=state.h,
        num_params=state.num_params,
        lam=0.0,
        R=0.0,
        train_mse=mse(state, Xtr, Ztr),
        test_mse=mse(state, Xte, Zte),
        train_error_rate=error_rate(state, Xtr, ytr),
        test_error_rate=error_rate(state, Xte, yte),
        weight_l2=state.weight_l2(),
        epochs_trained=state.total_epochs_trained,
        wall_time_ms=(time.perf_counter() - t0) * 1e3,
    )


def train_point(dataset, h, cfg, init_scale, seed, experiment="NnScratchSweep"):
    """Fresh network of width ``h`` trained under ``cfg`` and measured."""
    t0 = time.perf_counter()
    state = init_mlp(seed, dataset.n_inputs, h, dataset.num_classes, init_scale)
    state, log = train(state, dataset, cfg)
    return NnRun(_measure(state, dataset, log, experiment, seed, t0), log, reused=False)


def reuse_sweep(dataset, h_list, switch_off_h, cfg, init_scale=1.0, seed=0, experiment="NnReuseSweep"):
    """Train one network per width in ``h_list`` under the reuse protocol.

    Widths up to ``switch_off_h`` grow from the previous trained network;
    wider ones start from a fresh initialization.  ``switch_off_h=None``
    never switches off, giving a pure reuse chain.  Every network gets the
    same ``cfg`` epoch budget.
    """
    h_list = [int(h) for h in h_list]
    if any(b <= a for a, b in zip(h_list, h_list[1:])):
        raise ValueError(f"h_list must be strictly increasing, got {h_list}")
    runs = []
    prev = None
    for h in h_list:
        t0 = time.perf_counter()
        chained = switch_off_h is None or h <= switch_off_h
        if chained and prev is not None:
            state = grow_hidden(prev, seed, h)
        elif chained:
            state = init_mlp(seed, dataset.n_inputs, h, dataset.num_classes, init_scale)
        else:
            state = init_mlp(derive_seed(seed, "fresh", h), dataset.n_inputs, h, dataset.num_classes, init_scale)
        reused = chained and prev is not None
        state, log = train(state, dataset, cfg)
        prev = state if chained else None
        runs.append(NnRun(_measure(state, dataset, log, experiment, seed, t0), log, reused))
    return runs
