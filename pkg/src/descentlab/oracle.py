"""Brute-force validators for the solution-set geometry on tiny instances.

These checks deliberately avoid the closed forms in :mod:`descentlab.solver`
where they verify them: the anchored-ridge minimizer is found by plain
gradient descent, and solution sets are described from a full SVD.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DidNotConverge, DimensionMismatch, Infeasible
from .features import make_feature_map, transform
from .rng import stream
from .solver import RidgeProblem, anchored_ridge_solve, min_norm_solve, svd_cutoff


@dataclass(frozen=True, eq=False)
class SolutionSetDescription:
    """Affine set ``{particular + nullspace_basis @ c}`` of exact solutions."""

    particular: np.ndarray
    nullspace_basis: np.ndarray
    dim: int

    def point(self, c):
        return self.particular + self.nullspace_basis @ np.asarray(c, dtype=np.float64)


def solution_set(Phi, z, tol=1e-8):
    """Describe every ``w`` with ``Phi @ w == z``.

    The dimension is ``M - rank(Phi)`` with rank taken from the SVD under
    the solver's cutoff rule.  Raises :class:`Infeasible` when ``z`` is not
    in the range of ``Phi``.
    """
    phi = np.asarray(Phi, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    n, m = phi.shape
    if z.shape[0] != n:
        raise DimensionMismatch(f"Phi has {n} rows, z has {z.shape[0]}")
    u, s, vt = np.linalg.svd(phi, full_matrices=True)
    r = int(np.count_nonzero(s > svd_cutoff(s, phi.shape)))
    coef = (u[:, :r].T @ z) / s[:r]
    particular = vt[:r].T @ coef
    miss = np.linalg.norm(phi @ particular - z)
    if miss > tol * (1.0 + np.linalg.norm(z)):
        raise Infeasible(f"z is not in the range of Phi (residual {miss:.3g}, rank {r} < {n} rows)")
    basis = vt[r:].T.copy()
    return SolutionSetDescription(particular, basis, m - r)


def gd_minimize_anchored(Phi, z, lam, p, steps=2_000_000, step_size=None, w0=None, tol=1e-10):
    """Minimize ``||Phi w - z||^2 + lam ||w - p||^2`` by plain gradient descent.

    The gradient is ``2 Phi^T (Phi w - z) + 2 lam (w - p)`` and the default
    step is just under ``1/L`` with ``L = 2 (sigma_max(Phi)^2 + lam)``.
    ``z`` and ``p`` may be vectors or ``K``-column matrices.  Stops once the
    gradient norm is at most ``tol``; otherwise raises
    :class:`DidNotConverge` carrying the lowest-gradient iterate.
    """
    phi = np.asarray(Phi, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if not lam > 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    lipschitz = 2.0 * (np.linalg.norm(phi, 2) ** 2 + lam)
    if step_size is None:
        step_size = 0.999 / lipschitz
    elif not 0 < step_size < 1.0 / lipschitz:
        raise ValueError(f"step_size must lie in (0, 1/L) = (0, {1.0 / lipschitz:.6g}), got {step_size}")
    w = np.zeros(p.shape) if w0 is None else np.array(w0, dtype=np.float64)
    gram = phi.T @ phi
    target = phi.T @ z + lam * p
    best_w, best_g = w.copy(), np.inf
    for _ in range(steps):
        grad = 2.0 * (gram @ w + lam * w - target)
        g = np.sqrt(np.sum(grad * grad))
        if g < best_g:
            best_w, best_g = w.copy(), g
        if g <= tol:
            return w
        w = w - step_size * grad
    raise DidNotConverge(f"gradient norm {best_g:.3g} > {tol:g} after {steps} steps", best_w, best_g)


@dataclass(frozen=True)
class NormCurve:
    capacities: np.ndarray
    norms: np.ndarray
    ranks: np.ndarray
    n_rows: int

    @property
    def interpolating(self):
        """Capacities where the feature matrix has full row rank."""
        return self.ranks == self.n_rows

    def violations(self, slack=1e-8):
        """Indices ``j`` where ``norm[j+1] > norm[j] + slack`` inside the
        interpolating regime; below it no monotonicity is claimed."""
        interp = self.interpolating
        return [
            j for j in range(len(self.norms) - 1)
            if interp[j] and interp[j + 1] and self.norms[j + 1] > self.norms[j] + slack
        ]


def nested_norm_curve(seed, dataset, D_list, lam=0.0, feature_scale=1.0):
    """Min-norm (or ridge) solution norm for nested feature maps over ``D_list``.

    Uses the dataset's train split, or every row when no split is set.
    """
    D_list = [int(d) for d in D_list]
    if any(b <= a for a, b in zip(D_list, D_list[1:])):
        raise ValueError(f"D_list must be strictly increasing, got {D_list}")
    if dataset.n_train:
        X, Z, _ = dataset.train()
    else:
        X, Z = dataset.inputs, dataset.targets
    norms, ranks = [], []
    for D in D_list:
        phi = transform(make_feature_map(seed, dataset.n_inputs, D, feature_scale=feature_scale), X)
        res = min_norm_solve(phi, Z) if lam == 0 else anchored_ridge_solve(RidgeProblem(phi, Z, lam))
        norms.append(res.weight_l2)
        ranks.append(res.rank)
    return NormCurve(np.asarray(D_list), np.asarray(norms), np.asarray(ranks), X.shape[0])


def appended_column_norms(Phi, Z, column):
    """Min-norm solution norm before and after appending ``column`` to ``Phi``."""
    phi = np.asarray(Phi, dtype=np.float64)
    grown = np.column_stack([phi, np.asarray(column, dtype=np.float64)])
    before = min_norm_solve(phi, Z)
    after = min_norm_solve(grown, Z)
    return before.weight_l2, after.weight_l2, after.W[-1]


# ----------------------------------------------------------------------------
# the oracle suite run by ``descentlab oracle-check``


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _low_rank(rng, n, m, r):
    if r == 0:
        return np.zeros((n, m))
    return rng.standard_normal((n, r)) @ rng.standard_normal((r, m))


def check_solution_set_dims(rng, count=50):
    """``dim == M - rank`` exactly, with the rank known by construction."""
    bad = []
    cases = [(np.array([[1.0, 0.0]]), 1)]
    while len(cases) < count:
        n, m = rng.integers(1, 6), rng.integers(1, 9)
        r = int(rng.integers(0, min(n, m) + 1))
        cases.append((_low_rank(rng, n, m, r), r))
    for phi, r in cases:
        n, m = phi.shape
        z = phi @ rng.standard_normal(m)
        sset = solution_set(phi, z)
        basis = sset.nullspace_basis
        ok = (
            sset.dim == m - r
            and basis.shape == (m, m - r)
            and np.allclose(basis.T @ basis, np.eye(m - r), atol=1e-10)
            and np.max(np.abs(phi @ basis), initial=0.0) <= 1e-8 * (1 + np.abs(phi).max())
        )
        if not ok:
            bad.append((n, m, r, sset.dim))
    line = solution_set(np.array([[1.0, 0.0]]), np.array([1.0]))
    return CheckResult(
        "solution-set-dimension",
        not bad and line.dim == 1,
        f"{len(cases)} instances, N=1 M=2 dim={line.dim}" + (f", failures {bad}" if bad else ""),
    )


def check_interpolating_points(rng, samples=100):
    phi = rng.standard_normal((3, 7))
    z = rng.standard_normal(3)
    sset = solution_set(phi, z)
    worst = max(
        np.max(np.abs(phi @ sset.point(rng.standard_normal(sset.dim) * 10) - z)) for _ in range(samples)
    )
    return CheckResult("affine-set-interpolates", sset.dim == 4 and worst <= 1e-8, f"dim={sset.dim}, max residual {worst:.2e}")


def check_min_norm_optimal(rng, instances=50, draws=100, slack=1e-10):
    violations = 0
    for _ in range(instances):
        n = int(rng.integers(1, 6))
        m = int(rng.integers(n + 1, n + 6))
        phi = rng.standard_normal((n, m))
        z = rng.standard_normal(n)
        best = min_norm_solve(phi, z).weight_l2
        sset = solution_set(phi, z)
        for _ in range(draws):
            other = np.linalg.norm(sset.point(rng.standard_normal(sset.dim) * rng.uniform(0.01, 3)))
            if best > other + slack:
                violations += 1
    return CheckResult("min-norm-optimal", violations == 0, f"{instances}x{draws} comparisons, {violations} violations")


def random_ridge_instance(rng):
    n = int(rng.integers(1, 6))
    m = int(rng.integers(1, 9))
    k = int(rng.integers(1, 4))
    phi = rng.standard_normal((n, m)) / np.sqrt(m)
    z = rng.standard_normal((n, k))
    p = rng.standard_normal((m, k))
    return phi, z, p


def check_solver_matches_gd(rng, instances=20, tol=1e-6):
    worst = 0.0
    for i in range(instances):
        lam = (1e-3, 1.0)[i % 2]
        phi, z, p = random_ridge_instance(rng)
        closed = anchored_ridge_solve(RidgeProblem(phi, z, lam, p)).W
        oracle = gd_minimize_anchored(phi, z, lam, p)
        worst = max(worst, float(np.max(np.abs(closed - oracle))))
    return CheckResult("solver-vs-gradient-descent", worst <= tol, f"{instances} instances, max |dW| = {worst:.2e}")


def nested_curve_dataset(seed, n=20):
    """Small synthetic problem whose nested feature maps interpolate from D = n."""
    from .data import subsample_and_split, synth_gaussian_classes

    ds = synth_gaussian_classes(seed, n // 2, 4, 50, 2.0)
    return subsample_and_split(ds, seed, n, 0)


def check_nested_monotone(seed, slack=1e-8):
    ds = nested_curve_dataset(seed)
    curve = nested_norm_curve(seed, ds, range(20, 61, 5))
    bad = curve.violations(slack)
    return CheckResult(
        "nested-norm-monotone",
        not bad and bool(curve.interpolating.all()),
        "norms " + ", ".join(f"{v:.4g}" for v in curve.norms) + (f"; increases at {bad}" if bad else ""),
    )


def check_tangent_column(rng, slack=1e-8):
    """A new column orthogonal to the dual solution gets zero weight and
    leaves the min-norm norm unchanged.  Duplicating column ``j`` instead
    makes splitting ``w_j`` in half feasible, so the squared norm drops by
    at least ``w_j**2 / 2``."""
    phi = rng.standard_normal((4, 9))
    z = rng.standard_normal(4)
    res = min_norm_solve(phi, z)
    dual = np.linalg.lstsq(phi.T, res.W[:, 0], rcond=None)[0]
    c = rng.standard_normal(4)
    c -= dual * (c @ dual) / (dual @ dual)
    before, after, w_new = appended_column_norms(phi, z, c)
    tangent_ok = abs(after - before) <= slack and abs(w_new[0]) <= slack
    j = int(np.argmax(np.abs(res.W[:, 0])))
    dup_before, dup_after, _ = appended_column_norms(phi, z, phi[:, j])
    bound = np.sqrt(dup_before**2 - res.W[j, 0] ** 2 / 2)
    dup_ok = dup_after <= bound + 1e-8 * (1 + dup_before)
    return CheckResult(
        "tangent-column",
        tangent_ok and dup_ok,
        f"orthogonal column: {before:.10g} -> {after:.10g}; duplicate: {dup_before:.10g} -> {dup_after:.10g} "
        f"(bound {bound:.10g})",
    )


def run_oracle_suite(seed=0):
    rng = stream(seed, "oracle-suite")
    return [
        check_solution_set_dims(rng),
        check_interpolating_points(rng),
        check_min_norm_optimal(rng),
        check_solver_matches_gd(rng),
        check_nested_monotone(seed),
        check_tangent_column(rng),
    ]
