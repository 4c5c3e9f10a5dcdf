import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from descentlab import _kernels

needs_ext = pytest.mark.skipif("cython" not in _kernels.available_backends(), reason="extension not built")


def _problem(seed, n, P, h, K):
    rng = np.random.default_rng(seed)
    arrays = [rng.standard_normal(s) * 0.3 for s in ((h, P), (h,), (K, h), (K,))]
    X = rng.uniform(size=(n, P))
    Z = np.eye(K)[rng.integers(0, K, n)]
    return arrays, X, Z, rng.permutation(n).astype(np.int64)


@needs_ext
@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 10**6),
    n=st.integers(1, 40),
    P=st.integers(1, 12),
    h=st.integers(0, 9),
    K=st.integers(1, 4),
    batch=st.integers(1, 40),
)
def test_backends_agree(seed, n, P, h, K, batch):
    batch = min(batch, n)
    arrays, X, Z, order = _problem(seed, n, P, h, K)
    py = [a.copy() for a in arrays]
    cy = [a.copy() for a in arrays]
    lp = _kernels.get_backend("python").sgd_epoch(*py, X, Z, order, batch, 0.05)
    lc = _kernels.get_backend("cython").sgd_epoch(*cy, X, Z, order, batch, 0.05)
    assert lc == pytest.approx(lp, rel=1e-10, abs=1e-12)
    for a, b in zip(py, cy):
        np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("name", ["python", pytest.param("cython", marks=needs_ext)])
def test_zero_rate_reports_loss_only(name):
    arrays, X, Z, order = _problem(0, 10, 3, 4, 2)
    before = [a.copy() for a in arrays]
    total = _kernels.get_backend(name).sgd_epoch(*arrays, X, Z, order, 4, 0.0)
    for a, b in zip(arrays, before):
        np.testing.assert_array_equal(a, b)
    out = np.maximum(X @ arrays[0].T + arrays[1], 0) @ arrays[2].T + arrays[3]
    assert total == pytest.approx(np.sum((out - Z) ** 2), rel=1e-12)


def test_unknown_backend():
    with pytest.raises(ValueError):
        _kernels.get_backend("fortran")


def _backend_under(env_value):
    env = dict(os.environ, DESCENTLAB_BACKEND=env_value)
    return subprocess.run(
        [sys.executable, "-c", "import descentlab._kernels as k; print(k.BACKEND)"],
        env=env, capture_output=True, text=True,
    )


def test_env_forces_fallback():
    assert _backend_under("python").stdout.strip() == "python"
    assert _backend_under("bogus").returncode != 0
