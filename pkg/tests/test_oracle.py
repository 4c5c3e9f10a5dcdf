import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from descentlab.errors import DidNotConverge, Infeasible
from descentlab.oracle import (
    appended_column_norms,
    gd_minimize_anchored,
    nested_curve_dataset,
    nested_norm_curve,
    run_oracle_suite,
    solution_set,
)
from descentlab.solver import RidgeProblem, anchored_ridge_solve, min_norm_solve


def test_line_in_the_plane():
    s = solution_set(np.array([[1.0, 0.0]]), np.array([2.0]))
    assert s.dim == 1
    np.testing.assert_allclose(s.particular, [2.0, 0.0])
    np.testing.assert_allclose(np.abs(s.nullspace_basis.ravel()), [0.0, 1.0])


def test_infeasible():
    with pytest.raises(Infeasible):
        solution_set(np.array([[1.0, 0.0], [1.0, 0.0]]), np.array([1.0, 2.0]))


def test_square_full_rank_is_a_point():
    s = solution_set(np.array([[2.0, 0.0], [0.0, 4.0]]), np.array([2.0, 2.0]))
    assert s.dim == 0
    np.testing.assert_allclose(s.particular, [1.0, 0.5])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 5), extra=st.integers(1, 6))
def test_min_norm_beats_the_solution_set(seed, n, extra):
    rng = np.random.default_rng(seed)
    phi = rng.standard_normal((n, n + extra))
    z = rng.standard_normal(n)
    best = min_norm_solve(phi, z).weight_l2
    s = solution_set(phi, z)
    for _ in range(20):
        assert best <= np.linalg.norm(s.point(rng.standard_normal(s.dim))) + 1e-10


def test_gd_matches_solver():
    rng = np.random.default_rng(7)
    phi = rng.standard_normal((4, 6)) / np.sqrt(6)
    z = rng.standard_normal((4, 2))
    p = rng.standard_normal((6, 2))
    w = gd_minimize_anchored(phi, z, 0.5, p)
    np.testing.assert_allclose(w, anchored_ridge_solve(RidgeProblem(phi, z, 0.5, p)).W, atol=1e-9)


def test_gd_reports_non_convergence():
    rng = np.random.default_rng(8)
    phi = rng.standard_normal((3, 3))
    with pytest.raises(DidNotConverge) as info:
        gd_minimize_anchored(phi, np.ones(3), 1e-3, np.zeros(3), steps=5)
    assert info.value.iterate.shape == (3,) and info.value.grad_norm > 0
    with pytest.raises(ValueError):
        gd_minimize_anchored(phi, np.ones(3), 1.0, np.zeros(3), step_size=10.0)
    with pytest.raises(ValueError):
        gd_minimize_anchored(phi, np.ones(3), 0.0, np.zeros(3))


def test_nested_norm_curve_non_increasing():
    curve = nested_norm_curve(0, nested_curve_dataset(0), range(20, 61, 5))
    assert curve.interpolating.all()
    assert curve.violations(1e-8) == []
    assert curve.norms[0] > curve.norms[-1]


def test_orthogonal_column_keeps_norm():
    rng = np.random.default_rng(3)
    phi = rng.standard_normal((3, 6))
    z = rng.standard_normal(3)
    w = min_norm_solve(phi, z).W[:, 0]
    dual = np.linalg.lstsq(phi.T, w, rcond=None)[0]
    c = rng.standard_normal(3)
    c -= dual * (c @ dual) / (dual @ dual)
    before, after, new_w = appended_column_norms(phi, z, c)
    assert after == pytest.approx(before, abs=1e-10)
    assert abs(new_w[0]) < 1e-10


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_appending_any_column_never_grows_norm(seed):
    rng = np.random.default_rng(seed)
    phi = rng.standard_normal((3, 5))
    z = rng.standard_normal((3, 2))
    before, after, _ = appended_column_norms(phi, z, rng.standard_normal(3))
    assert after <= before + 1e-10


@pytest.mark.parametrize("seed", [0, 1])
def test_suite_passes(seed):
    results = run_oracle_suite(seed)
    assert [r.name for r in results if not r.passed] == []
    assert len(results) == 6
