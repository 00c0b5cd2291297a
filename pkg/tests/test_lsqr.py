import numpy as np
import pytest

from sketchlsq.errors import DimensionError
from sketchlsq.lsqr import (
    lsqr_solve,
    matrix_operator,
    right_preconditioned_operator,
)
from sketchlsq.linalg import householder_qr


def _random_problem(m, n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    return a, b


def test_identity_converges_in_one_iteration():
    b = np.random.default_rng(0).standard_normal(40)
    x, hist, conv = lsqr_solve(matrix_operator(np.eye(40)), b)
    assert conv
    assert hist.iterations == 1
    np.testing.assert_allclose(x, b, atol=1e-14)


def test_matches_dense_lstsq_when_converged():
    a, b = _random_problem(120, 15, 1)
    x, hist, conv = lsqr_solve(matrix_operator(a), b, tol=1e-13)
    assert conv
    xref = np.linalg.lstsq(a, b, rcond=None)[0]
    np.testing.assert_allclose(x, xref, atol=1e-10)


def test_residual_estimates_monotone_nonincreasing():
    a, b = _random_problem(80, 12, 2)
    _, hist, _ = lsqr_solve(matrix_operator(a), b)
    res = np.asarray(hist.resnorm_est)
    assert (np.diff(res) <= 1e-14 * res[0]).all()


def test_history_starts_at_zero_iterate():
    a, b = _random_problem(30, 5, 3)
    _, hist, _ = lsqr_solve(matrix_operator(a), b)
    assert hist.resnorm_est[0] == pytest.approx(np.linalg.norm(b))
    assert len(hist.resnorm_est) == hist.iterations + 1
    assert len(hist.normar_est) == len(hist.resnorm_est)


def test_zero_rhs_returns_zero_converged():
    a, _ = _random_problem(20, 4, 4)
    x, hist, conv = lsqr_solve(matrix_operator(a), np.zeros(20))
    assert conv
    assert hist.iterations == 0
    assert np.array_equal(x, np.zeros(4))


def test_rhs_orthogonal_to_range_stops_at_zero():
    # A^T b = 0 means x = 0 already minimizes; a breakdown, not a failure
    a, _ = _random_problem(25, 6, 5)
    g = np.random.default_rng(6).standard_normal(25)
    q = householder_qr(a).q_economy()
    b = g - q @ (q.T @ g)
    x, _, conv = lsqr_solve(matrix_operator(a), b)
    assert conv
    np.testing.assert_allclose(x, np.zeros(6), atol=1e-12)


def test_maxit_bounds_iterations_and_reports_nonconverged():
    a, b = _random_problem(100, 30, 7)
    a[:, -1] = a[:, 0] + 1e-9 * a[:, 1]  # near-dependent columns slow LSQR down
    x, hist, conv = lsqr_solve(matrix_operator(a), b, tol=1e-15, maxit=3)
    assert hist.iterations <= 3
    assert not conv


def test_observer_sees_every_iterate_in_order():
    a, b = _random_problem(60, 8, 8)
    seen = []
    lsqr_solve(matrix_operator(a), b, observer=lambda k, x: seen.append((k, x.copy())))
    assert [k for k, _ in seen] == list(range(len(seen)))
    assert np.array_equal(seen[0][1], np.zeros(8))


def test_converged_flag_confirmed_against_true_residual():
    """The flag must be backed by a directly computed residual, not estimates."""
    a, b = _random_problem(200, 20, 9)
    x, _, conv = lsqr_solve(matrix_operator(a), b, tol=1e-12)
    assert conv
    r = b - a @ x
    resid_ok = np.linalg.norm(r) <= 1e-12 * np.linalg.norm(b)
    normal_eq_ok = np.linalg.norm(a.T @ r) <= 1e-10 * np.linalg.norm(a) * np.linalg.norm(r)
    assert resid_ok or normal_eq_ok


def test_rejects_mismatched_rhs_and_bad_tol():
    a, b = _random_problem(10, 3, 10)
    with pytest.raises(DimensionError):
        lsqr_solve(matrix_operator(a), np.ones(9))
    with pytest.raises(ValueError):
        lsqr_solve(matrix_operator(a), b, tol=0.0)


def test_preconditioned_operator_is_consistent_adjoint_pair():
    a, _ = _random_problem(50, 10, 11)
    r = householder_qr(a).r
    op = right_preconditioned_operator(a, r)
    rng = np.random.default_rng(12)
    v = rng.standard_normal(10)
    w = rng.standard_normal(50)
    np.testing.assert_allclose(op.apply(v) @ w, v @ op.apply_transpose(w), rtol=1e-10)
    assert op.rows == 50 and op.cols == 10


def test_preconditioned_solve_recovers_unpreconditioned_solution():
    a, b = _random_problem(150, 12, 13)
    r = householder_qr(a).r
    y, _, conv = lsqr_solve(right_preconditioned_operator(a, r), b, tol=1e-13)
    assert conv
    from scipy.linalg import solve_triangular

    x = solve_triangular(r, y)
    xref = np.linalg.lstsq(a, b, rcond=None)[0]
    np.testing.assert_allclose(x, xref, atol=1e-9)
