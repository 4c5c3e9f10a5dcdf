"""Random ReLU feature maps with nested growth.

Row ``d`` of the projection is drawn from its own substream keyed by
``(seed, d)``, so a map with more features extends a smaller one without
touching the rows they share.

Rows are centered to sum to zero by default.  Inputs here are non-negative
with a large common offset (pixels, min-max rescaled blobs); an uncentered
row then sees ``w . x`` dominated by that offset and the feature is either
dead on every sample or purely linear, which starves the rank of the
feature matrix.  A zero-sum row ignores any constant shift of the inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .rng import stream

# Projections are applied in fixed-width, zero-padded row blocks so every
# matrix product has the same shape whatever D is.  That keeps shared
# columns bit-identical across nested maps regardless of BLAS blocking.
_BLOCK = 64


@dataclass(frozen=True, eq=False)
class FeatureMap:
    seed: int
    n_inputs: int
    n_features: int
    projection: np.ndarray
    include_bias: bool = True
    feature_scale: float = 1.0
    center_rows: bool = True

    @property
    def output_dim(self):
        return self.n_features + (1 if self.include_bias else 0)


def projection_row(seed, n_inputs, d, feature_scale=1.0, center=True):
    row = stream(seed, "relu-row", d).standard_normal(n_inputs) * (feature_scale / np.sqrt(n_inputs))
    if center and n_inputs > 1:
        row -= row.mean()
    return row


def make_feature_map(seed, P, D, include_bias=True, feature_scale=1.0, center_rows=True):
    """Build the ``D``-feature map for inputs of dimension ``P``.

    Row ``d`` is Gaussian with standard deviation ``feature_scale / sqrt(P)``,
    minus its mean when ``center_rows``.
    """
    if P < 1:
        raise ValueError(f"input dimension must be >= 1, got {P}")
    if D < 0:
        raise ValueError(f"feature count must be >= 0, got {D}")
    proj = np.empty((D, P), dtype=np.float64)
    for d in range(D):
        proj[d] = projection_row(seed, P, d, feature_scale, center_rows)
    proj.setflags(write=False)
    return FeatureMap(int(seed), int(P), int(D), proj, bool(include_bias), float(feature_scale), bool(center_rows))


def transform(fm, X):
    """``max(0, X @ projection.T)`` with a trailing ones column when biased."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != fm.n_inputs:
        raise DimensionMismatch(f"inputs have shape {X.shape}, feature map expects {fm.n_inputs} columns")
    n, D = X.shape[0], fm.n_features
    out = np.empty((n, fm.output_dim), dtype=np.float64)
    block = np.zeros((_BLOCK, fm.n_inputs), dtype=np.float64)
    for start in range(0, D, _BLOCK):
        stop = min(start + _BLOCK, D)
        block[: stop - start] = fm.projection[start:stop]
        block[stop - start:] = 0.0
        pre = X @ block.T
        np.maximum(pre[:, : stop - start], 0.0, out=out[:, start:stop])
    if fm.include_bias:
        out[:, D] = 1.0
    return out
