import gzip

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from descentlab import config
from descentlab.data import (
    IMAGE_MAGIC,
    LABEL_MAGIC,
    load_dataset,
    load_mnist_idx,
    one_hot,
    save_dataset,
    subsample_and_split,
    synth_gaussian_classes,
    write_idx,
)
from descentlab.errors import BadMagic, CountMismatch, NotEnoughRows, TruncatedFile


def _idx_pair(tmp_path, n=6, rows=2, cols=3, gz=False):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, size=(n, rows, cols), dtype=np.uint8)
    labels = np.arange(n, dtype=np.uint8) % 4
    ip, lp = tmp_path / "img.idx", tmp_path / "lab.idx"
    write_idx(ip, images, IMAGE_MAGIC)
    write_idx(lp, labels, LABEL_MAGIC)
    if gz:
        for p in (ip, lp):
            p.write_bytes(gzip.compress(p.read_bytes()))
    return ip, lp, images, labels


def test_one_hot():
    assert one_hot([2, 0], 3).tolist() == [[0, 0, 1], [1, 0, 0]]


@pytest.mark.parametrize("gz", [False, True])
def test_idx_roundtrip(tmp_path, gz):
    ip, lp, images, labels = _idx_pair(tmp_path, gz=gz)
    ds = load_mnist_idx(ip, lp)
    assert ds.inputs.shape == (6, 6)
    np.testing.assert_array_equal(ds.inputs, images.reshape(6, 6) / 255.0)
    np.testing.assert_array_equal(ds.labels, labels)
    assert ds.num_classes == 4
    assert ds.inputs.min() >= 0 and ds.inputs.max() <= 1


def test_idx_errors(tmp_path):
    ip, lp, _, _ = _idx_pair(tmp_path)
    with pytest.raises(BadMagic):
        load_mnist_idx(lp, lp)
    short = tmp_path / "short.idx"
    short.write_bytes(ip.read_bytes()[:-1])
    with pytest.raises(TruncatedFile):
        load_mnist_idx(short, lp)
    few = tmp_path / "few.idx"
    write_idx(few, np.zeros(5, dtype=np.uint8), LABEL_MAGIC)
    with pytest.raises(CountMismatch) as info:
        load_mnist_idx(ip, few)
    assert "few.idx" in str(info.value)
    stub = tmp_path / "stub.idx"
    stub.write_bytes(b"\x00\x00")
    with pytest.raises(TruncatedFile):
        load_mnist_idx(stub, lp)


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2**63),
    n_train=st.integers(0, 30),
    n_test=st.integers(0, 30),
    balanced=st.booleans(),
)
def test_split_disjoint_and_deterministic(seed, n_train, n_test, balanced):
    ds = synth_gaussian_classes(1, 20, 3, 4, 1.0)
    a = subsample_and_split(ds, seed, n_train, n_test, balanced)
    b = subsample_and_split(ds, seed, n_train, n_test, balanced)
    assert a.n_train == n_train and a.n_test == n_test
    assert not set(a.train_idx) & set(a.test_idx)
    np.testing.assert_array_equal(a.train_idx, b.train_idx)
    np.testing.assert_array_equal(a.test_idx, b.test_idx)


def test_balanced_split_counts():
    ds = synth_gaussian_classes(2, 50, 4, 3, 1.0)
    s = subsample_and_split(ds, 9, 40, 20, balanced=True)
    _, _, y = s.train()
    assert np.bincount(y, minlength=4).tolist() == [10, 10, 10, 10]


def test_split_too_large():
    ds = synth_gaussian_classes(0, 5, 2, 3, 1.0)
    with pytest.raises(NotEnoughRows):
        subsample_and_split(ds, 0, 8, 3)


def test_synthetic_layout():
    ds = synth_gaussian_classes(3, 7, 3, 5, 2.0)
    assert ds.inputs.shape == (21, 5)
    assert ds.labels.tolist() == [0] * 7 + [1] * 7 + [2] * 7
    assert ds.inputs.min() == 0.0 and ds.inputs.max() == 1.0
    np.testing.assert_array_equal(ds.targets.sum(axis=1), 1.0)
    with pytest.raises(ValueError):
        synth_gaussian_classes(0, 3, 1, 2, 1.0)


def test_datasets_are_read_only():
    ds = synth_gaussian_classes(3, 2, 2, 2, 1.0)
    with pytest.raises(ValueError):
        ds.inputs[0, 0] = 5.0


def test_cache_roundtrip(tmp_path, small_ds):
    path = tmp_path / "ds.bin"
    save_dataset(small_ds, path)
    back = load_dataset(path)
    for name in ("inputs", "targets", "labels", "train_idx", "test_idx"):
        np.testing.assert_array_equal(getattr(back, name), getattr(small_ds, name))
    assert path.read_bytes().split(b"\n")[1] == b"120 20 3 60 40"


def test_cache_errors(tmp_path, small_ds):
    path = tmp_path / "ds.bin"
    save_dataset(small_ds, path)
    raw = path.read_bytes()
    (tmp_path / "cut.bin").write_bytes(raw[:-8])
    with pytest.raises(TruncatedFile):
        load_dataset(tmp_path / "cut.bin")
    (tmp_path / "bad.bin").write_bytes(b"something else\n" + raw)
    with pytest.raises(BadMagic):
        load_dataset(tmp_path / "bad.bin")


def test_data_dir_env(monkeypatch, tmp_path):
    monkeypatch.setenv("DESCENTLAB_DATA_DIR", str(tmp_path))
    assert config.data_dir() == tmp_path
    monkeypatch.delenv("DESCENTLAB_DATA_DIR")
    assert config.data_dir().name == "descentlab"
