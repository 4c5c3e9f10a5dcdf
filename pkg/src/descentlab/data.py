"""Datasets: MNIST IDX ingestion, synthetic Gaussian classes, subsampling
and the binary cache format.

Inputs always live in ``[0, 1]`` and targets are one-hot ``{0, 1}`` rows.
A constant bias column is *not* added here; that is the feature map's job.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BadMagic, CountMismatch, NotEnoughRows, TruncatedFile
from .rng import stream

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

CACHE_HEADER = "descentlab-dataset v1"

_EMPTY_INDEX = np.zeros(0, dtype=np.int64)


def one_hot(labels, num_classes):
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.shape[0], num_classes), dtype=np.float64)
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design matrix, labels and one-hot targets plus a train/test split.

    ``train_idx`` and ``test_idx`` index rows of ``inputs``; both are empty
    until :func:`subsample_and_split` is applied.
    """

    inputs: np.ndarray
    labels: np.ndarray
    targets: np.ndarray
    train_idx: np.ndarray = field(default_factory=lambda: _EMPTY_INDEX)
    test_idx: np.ndarray = field(default_factory=lambda: _EMPTY_INDEX)

    def __post_init__(self):
        for name in ("inputs", "labels", "targets", "train_idx", "test_idx"):
            arr = getattr(self, name)
            arr.setflags(write=False)

    @property
    def n_total(self):
        return self.inputs.shape[0]

    @property
    def n_inputs(self):
        return self.inputs.shape[1]

    @property
    def num_classes(self):
        return self.targets.shape[1]

    @property
    def n_train(self):
        return self.train_idx.shape[0]

    @property
    def n_test(self):
        return self.test_idx.shape[0]

    def train(self):
        """``(inputs, targets, labels)`` restricted to the train split."""
        i = self.train_idx
        return self.inputs[i], self.targets[i], self.labels[i]

    def test(self):
        i = self.test_idx
        return self.inputs[i], self.targets[i], self.labels[i]


def _make_dataset(inputs, labels, num_classes=None, train_idx=None, test_idx=None):
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    if num_classes is None:
        num_classes = int(labels.max()) + 1 if labels.size else 0
    return Dataset(
        inputs=np.ascontiguousarray(inputs, dtype=np.float64),
        labels=labels,
        targets=one_hot(labels, num_classes),
        train_idx=_EMPTY_INDEX.copy() if train_idx is None else np.asarray(train_idx, dtype=np.int64),
        test_idx=_EMPTY_INDEX.copy() if test_idx is None else np.asarray(test_idx, dtype=np.int64),
    )


def _read_bytes(path):
    path = Path(path)
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _parse_idx(path, raw, magic, ndim):
    header = 4 + 4 * ndim
    if len(raw) < 4:
        raise TruncatedFile(path, f"file has {len(raw)} bytes, too short for a magic number")
    (found,) = struct.unpack(">I", raw[:4])
    if found != magic:
        raise BadMagic(path, f"magic 0x{found:08x}, expected 0x{magic:08x}")
    if len(raw) < header:
        raise TruncatedFile(path, f"header needs {header} bytes, file has {len(raw)}")
    dims = struct.unpack(">" + "I" * ndim, raw[4:header])
    need = int(np.prod(dims, dtype=np.int64))
    if len(raw) - header < need:
        raise TruncatedFile(path, f"payload has {len(raw) - header} bytes, dimensions {dims} need {need}")
    data = np.frombuffer(raw, dtype=np.uint8, count=need, offset=header)
    return dims, data


def load_mnist_idx(images_path, labels_path):
    """Read an IDX image/label file pair (optionally gzipped) into a Dataset."""
    dims, pixels = _parse_idx(images_path, _read_bytes(images_path), IMAGE_MAGIC, 3)
    (n_labels,), labels = _parse_idx(labels_path, _read_bytes(labels_path), LABEL_MAGIC, 1)
    n, rows, cols = dims
    if n != n_labels:
        raise CountMismatch(labels_path, f"{n_labels} labels but {images_path} holds {n} images")
    inputs = pixels.reshape(n, rows * cols).astype(np.float64) / 255.0
    return _make_dataset(inputs, labels)


def write_idx(path, array, magic):
    """Write a uint8 array as IDX; used for fixtures and by ``fetch-data`` tests."""
    array = np.ascontiguousarray(array, dtype=np.uint8)
    header = struct.pack(">I", magic) + struct.pack(">" + "I" * array.ndim, *array.shape)
    Path(path).write_bytes(header + array.tobytes())


def subsample_and_split(ds, seed, n_train, n_test, balanced=False):
    """Deterministically choose disjoint train and test rows.

    The default draws a uniform shuffle of all rows (Fisher-Yates via the
    seeded stream) and takes the first ``n_train`` then the next ``n_test``.
    With ``balanced=True`` classes are interleaved round-robin after a
    per-class shuffle, so every prefix is as class-balanced as possible.
    """
    n_train, n_test = int(n_train), int(n_test)
    if n_train < 0 or n_test < 0:
        raise ValueError("split sizes must be non-negative")
    if n_train + n_test > ds.n_total:
        raise NotEnoughRows(f"requested {n_train}+{n_test} rows from a dataset of {ds.n_total}")
    rng = stream(seed, "split")
    if balanced:
        per_class = []
        for k in range(ds.num_classes):
            rows = np.flatnonzero(ds.labels == k)
            per_class.append(rows[rng.permutation(rows.shape[0])])
        depth = max((len(r) for r in per_class), default=0)
        order = [r[j] for j in range(depth) for r in per_class if j < len(r)]
        order = np.asarray(order, dtype=np.int64)
    else:
        order = rng.permutation(ds.n_total).astype(np.int64)
    return Dataset(
        inputs=ds.inputs,
        labels=ds.labels,
        targets=ds.targets,
        train_idx=order[:n_train].copy(),
        test_idx=order[n_train:n_train + n_test].copy(),
    )


def synth_gaussian_classes(seed, n_per_class, K, P, center_scale):
    """Isotropic Gaussian blobs around ``K`` random centers, rescaled to [0, 1].

    Rows are class-major: the first ``n_per_class`` rows carry label 0.
    """
    if K < 2:
        raise ValueError(f"need at least two classes, got K={K}")
    if P < 1:
        raise ValueError(f"need at least one input dimension, got P={P}")
    centers = center_scale * stream(seed, "centers").standard_normal((K, P))
    noise = stream(seed, "noise").standard_normal((K * n_per_class, P))
    labels = np.repeat(np.arange(K), n_per_class)
    x = centers[labels] + noise
    lo = x.min(axis=0) if x.size else np.zeros(P)
    span = (x.max(axis=0) - lo) if x.size else np.ones(P)
    span[span == 0] = 1.0
    inputs = np.clip((x - lo) / span, 0.0, 1.0)
    return _make_dataset(inputs, labels, num_classes=K)


def save_dataset(ds, path):
    """Write ``ds`` in the ``descentlab-dataset v1`` cache format."""
    n, p, k = ds.n_total, ds.n_inputs, ds.num_classes
    head = f"{CACHE_HEADER}\n{n} {p} {k} {ds.n_train} {ds.n_test}\n".encode("ascii")
    body = b"".join(
        np.ascontiguousarray(a, dtype="<f8").tobytes()
        for a in (ds.inputs, ds.targets, ds.labels, ds.train_idx, ds.test_idx)
    )
    Path(path).write_bytes(head + body)


def load_dataset(path):
    raw = Path(path).read_bytes()
    first = raw.find(b"\n")
    second = raw.find(b"\n", first + 1)
    if first < 0 or second < 0 or raw[:first].decode("ascii", "replace") != CACHE_HEADER:
        raise BadMagic(path, f"not a {CACHE_HEADER!r} file")
    try:
        n, p, k, n_train, n_test = (int(t) for t in raw[first + 1:second].split())
    except ValueError:
        raise BadMagic(path, "malformed dimension line") from None
    sizes = [n * p, n * k, n, n_train, n_test]
    payload = np.frombuffer(raw, dtype="<f8", offset=second + 1) if len(raw) > second + 1 else np.zeros(0)
    if payload.shape[0] < sum(sizes):
        raise TruncatedFile(path, f"payload has {payload.shape[0]} floats, header needs {sum(sizes)}")
    parts = np.split(payload[: sum(sizes)], np.cumsum(sizes)[:-1])
    targets = parts[1].reshape(n, k).astype(np.float64)
    return Dataset(
        inputs=parts[0].reshape(n, p).astype(np.float64),
        labels=parts[2].astype(np.int64),
        targets=targets,
        train_idx=parts[3].astype(np.int64),
        test_idx=parts[4].astype(np.int64),
    )
