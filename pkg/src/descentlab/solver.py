"""Closed-form solvers for the linear output layer.

All solvers treat the ``K`` target columns as independent right-hand sides
sharing a single factorization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, SingularSystem
from .rng import stream

DEFAULT_LAMBDA = 1e-8


@dataclass(frozen=True, eq=False)
class RidgeProblem:
    """Anchored least squares: ``||Phi W - Z||^2 + lam ||W - anchor||^2``."""

    phi: np.ndarray
    z: np.ndarray
    lam: float
    anchor: np.ndarray | None = None
    _anchor: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=np.float64)
        z = np.asarray(self.z, dtype=np.float64)
        if z.ndim == 1:
            z = z[:, None]
        if phi.ndim != 2 or phi.shape[0] != z.shape[0]:
            raise DimensionMismatch(f"Phi {phi.shape} and Z {z.shape} disagree on rows")
        if self.anchor is None:
            anchor = np.zeros((phi.shape[1], z.shape[1]))
        else:
            anchor = np.asarray(self.anchor, dtype=np.float64)
            if anchor.ndim == 1:
                anchor = anchor[:, None]
            if anchor.shape != (phi.shape[1], z.shape[1]):
                raise DimensionMismatch(f"anchor {anchor.shape}, expected {(phi.shape[1], z.shape[1])}")
        if not self.lam >= 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "_anchor", anchor)

    @property
    def anchor_matrix(self):
        return self._anchor

    @property
    def anchor_norms(self):
        return np.linalg.norm(self._anchor, axis=0)


@dataclass(frozen=True, eq=False)
class SolveResult:
    W: np.ndarray
    train_mse: float
    weight_l2: float
    per_output_norms: np.ndarray
    residual_norm: float
    rank: int
    method: str = ""


def svd_cutoff(s, shape):
    """Singular values at or below this are treated as zero."""
    if s.size == 0:
        return 0.0
    return np.finfo(np.float64).eps * max(shape) * s[0]


def numerical_rank(phi):
    phi = np.asarray(phi, dtype=np.float64)
    if phi.size == 0:
        return 0
    s = np.linalg.svd(phi, compute_uv=False)
    return int(np.count_nonzero(s > svd_cutoff(s, phi.shape)))


def _result(phi, z, W, lam, anchor, method, rank=None):
    fit = phi @ W - z
    # normal-equations residual: (Phi^T Phi + lam I) W - (Phi^T Z + lam P)
    resid = phi.T @ fit
    if lam:
        resid += lam * (W - anchor)
    norms = np.linalg.norm(W, axis=0)
    n, k = z.shape
    return SolveResult(
        W=W,
        train_mse=float(np.sum(fit * fit) / (n * k)) if n * k else 0.0,
        weight_l2=float(np.linalg.norm(W)),
        per_output_norms=norms,
        residual_norm=float(np.linalg.norm(resid)),
        rank=numerical_rank(phi) if rank is None else rank,
        method=method,
    )


def _cholesky(a, what):
    try:
        return scipy.linalg.cho_factor(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        cond = np.linalg.cond(a)
        raise SingularSystem(f"{what} is not numerically positive definite (cond ~ {cond:.3g})", cond) from None


def anchored_ridge_solve(prob, method="auto"):
    """Minimize ``||Phi W - Z||^2 + lam ||W - P||^2`` in closed form.

    ``method`` picks the primal ``M x M`` system or the dual ``N x N`` one;
    ``"auto"`` uses the dual when ``M > 2N``.  ``lam == 0`` is delegated to
    the pseudoinverse (the interpolant closest to the anchor).
    """
    phi, z, lam, anchor = prob.phi, prob.z, float(prob.lam), prob.anchor_matrix
    n, m = phi.shape
    if lam == 0.0:
        res = min_norm_solve(phi, z - phi @ anchor)
        W = res.W + anchor
        return _result(phi, z, W, 0.0, anchor, "pinv", rank=res.rank)
    if method == "auto":
        method = "dual" if m > 2 * n else "primal"
    if method == "primal":
        a = phi.T @ phi
        a[np.diag_indices_from(a)] += lam
        b = phi.T @ z + lam * anchor
        factor = _cholesky(a, "Phi^T Phi + lam I")
        W = scipy.linalg.cho_solve(factor, b, check_finite=False)
        # one step of iterative refinement
        W += scipy.linalg.cho_solve(factor, b - a @ W, check_finite=False)
    elif method == "dual":
        g = phi @ phi.T
        g[np.diag_indices_from(g)] += lam
        factor = _cholesky(g, "Phi Phi^T + lam I")
        rhs = z - phi @ anchor
        alpha = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
        alpha += scipy.linalg.cho_solve(factor, rhs - g @ alpha, check_finite=False)
        W = anchor + phi.T @ alpha
    else:
        raise ValueError(f"unknown method {method!r}")
    return _result(phi, z, W, lam, anchor, method)


def min_norm_solve(Phi, Z):
    """Least-squares solution of least Frobenius norm, ``pinv(Phi) @ Z``."""
    phi = np.asarray(Phi, dtype=np.float64)
    z = np.asarray(Z, dtype=np.float64)
    if z.ndim == 1:
        z = z[:, None]
    if phi.ndim != 2 or phi.shape[0] != z.shape[0]:
        raise DimensionMismatch(f"Phi {phi.shape} and Z {z.shape} disagree on rows")
    n, m = phi.shape
    if phi.size == 0:
        W = np.zeros((m, z.shape[1]))
        return _result(phi, z, W, 0.0, W, "pinv", rank=0)
    u, s, vt = np.linalg.svd(phi, full_matrices=False)
    keep = s > svd_cutoff(s, phi.shape)
    r = int(np.count_nonzero(keep))
    W = vt[:r].T @ ((u[:, :r].T @ z) / s[:r, None])
    return _result(phi, z, W, 0.0, np.zeros_like(W), "pinv", rank=r)


def sample_anchor(seed, M, K, R, per_column=False):
    """Anchor matrix whose columns lie on the sphere of radius ``R``.

    By default one direction is drawn and replicated across the ``K``
    columns; ``per_column=True`` draws each column independently.
    """
    if R < 0:
        raise ValueError(f"anchor radius must be >= 0, got {R}")
    if R == 0 or M == 0:
        return np.zeros((M, K))
    rng = stream(seed, "anchor")
    g = rng.standard_normal((M, K if per_column else 1))
    g *= R / np.linalg.norm(g, axis=0)
    return np.ascontiguousarray(np.broadcast_to(g, (M, K)))


def evaluate(W, Phi_eval, Z_eval, labels_eval):
    """Mean squared error per output entry and argmax classification error."""
    W = np.asarray(W, dtype=np.float64)
    phi = np.asarray(Phi_eval, dtype=np.float64)
    z = np.asarray(Z_eval, dtype=np.float64)
    labels = np.asarray(labels_eval)
    if phi.shape[1] != W.shape[0] or z.shape != (phi.shape[0], W.shape[1]) or labels.shape[0] != phi.shape[0]:
        raise DimensionMismatch(f"W {W.shape}, Phi {phi.shape}, Z {z.shape}, labels {labels.shape}")
    n, k = z.shape
    if n == 0:
        return {"mse": 0.0, "error_rate": 0.0}
    pred = phi @ W
    diff = pred - z
    return {
        "mse": float(np.sum(diff * diff) / (n * k)),
        "error_rate": float(np.mean(np.argmax(pred, axis=1) != labels)),
    }
