import numpy as np
import pytest

from sketchlsq.errors import DimensionError
from sketchlsq.linalg import singular_values
from sketchlsq.problems import (
    column_rescale,
    gen_random_ls,
    kahan_matrix,
    load_problem,
    save_problem,
    vandermonde_scaled,
)


def test_gen_random_ls_spectrum_matches_requested_kappa():
    p = gen_random_ls(200, 12, 1e8, 1e-6, 0)
    sv = singular_values(p.a)
    assert sv[0] == pytest.approx(1.0, rel=1e-10)
    assert sv[0] / sv[-1] == pytest.approx(1e8, rel=1e-6)
    assert p.kappa_by_construction == 1e8


def test_gen_random_ls_noise_orthogonal_to_range():
    p = gen_random_ls(150, 10, 100.0, 1e-3, 1)
    assert p.noise_norm == pytest.approx(1e-3)
    # b decomposes exactly as A xstar + e with e in the left null space
    np.testing.assert_allclose(p.b, p.a @ p.xstar + p.e, atol=1e-15)
    assert np.linalg.norm(p.qa_basis.T @ p.e) <= 1e-16
    assert np.linalg.norm(p.a.T @ p.e) <= 1e-14


def test_gen_random_ls_seed_reproducibility():
    p1 = gen_random_ls(50, 5, 10.0, 1e-8, 42)
    p2 = gen_random_ls(50, 5, 10.0, 1e-8, 42)
    p3 = gen_random_ls(50, 5, 10.0, 1e-8, 43)
    assert np.array_equal(p1.a, p2.a) and np.array_equal(p1.b, p2.b)
    assert not np.array_equal(p1.a, p3.a)


def test_gen_random_ls_validation():
    with pytest.raises(DimensionError):
        gen_random_ls(5, 5, 10.0, 0.0, 0)
    with pytest.raises(ValueError):
        gen_random_ls(10, 2, 0.5, 0.0, 0)
    with pytest.raises(ValueError):
        gen_random_ls(10, 2, 10.0, -1.0, 0)


def test_kahan_matrix_structure():
    k = kahan_matrix(8, 5, 1.1)
    assert k.shape == (8, 5)
    assert np.array_equal(k[5:], np.zeros((3, 5)))
    assert np.array_equal(k[:5], np.triu(k[:5]))
    s, c = np.sin(1.1), np.cos(1.1)
    assert k[0, 0] == 1.0
    assert k[0, 1] == -c
    assert k[2, 2] == pytest.approx(s**2)
    assert k[2, 3] == pytest.approx(-c * s**2)


def test_kahan_matrix_is_nearly_rank_deficient():
    k = kahan_matrix(1000, 100, 1.1)
    sv = singular_values(k)
    # smallest singular value collapses far below the smallest diagonal entry
    assert sv[-1] < 1e-3 * np.sin(1.1) ** 99
    assert sv[0] / sv[-1] > 1e12


def test_kahan_rejects_wide():
    with pytest.raises(DimensionError):
        kahan_matrix(4, 5, 1.1)


def test_vandermonde_scaled_entries_and_default_scaling():
    v = vandermonde_scaled(5, 3)
    t = np.linspace(-1, 1, 5)
    np.testing.assert_allclose(v[:, 0], np.ones(5))
    np.testing.assert_allclose(v[:, 1], t * 2.0**-10)
    np.testing.assert_allclose(v[:, 2], t**2 * 2.0**-20)
    custom = vandermonde_scaled(5, 2, col_scales=[1.0, 1.0])
    np.testing.assert_allclose(custom[:, 1], t)
    with pytest.raises(DimensionError):
        vandermonde_scaled(5, 3, col_scales=[1.0])


def test_vandermonde_extremely_ill_conditioned_by_default():
    v = vandermonde_scaled(1000, 10)
    sv = singular_values(v)
    assert sv[0] / sv[-1] > 1e16


def test_column_rescale_is_bitwise_exact():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((20, 6))
    exps = np.array([-3, 0, 7, -10, 2, 5])
    out = column_rescale(a, exps)
    for j, e in enumerate(exps):
        assert np.array_equal(out[:, j], a[:, j] * 2.0**e)
    # scaling back recovers the original bit pattern
    assert np.array_equal(column_rescale(out, -exps), a)


def test_column_rescale_overflow_and_length_checks():
    a = np.full((2, 1), 1e300)
    with pytest.raises(OverflowError):
        column_rescale(a, [100])
    with pytest.raises(DimensionError):
        column_rescale(np.ones((2, 3)), [1, 2])


def test_save_load_round_trip_bitwise(tmp_path):
    p = gen_random_ls(40, 6, 1e5, 1e-9, 3)
    path = tmp_path / "prob.csv"
    save_problem(p, path)
    q = load_problem(path)
    assert np.array_equal(p.a, q.a)
    assert np.array_equal(p.b, q.b)
    assert np.array_equal(p.xstar, q.xstar)
    assert np.array_equal(p.e, q.e)
    assert q.kappa_by_construction == 1e5
    assert q.noise_norm == p.noise_norm


def test_load_without_sidecar_still_gives_matrix(tmp_path):
    p = gen_random_ls(10, 3, 10.0, 1e-8, 4)
    path = tmp_path / "bare.csv"
    save_problem(p, path)
    (tmp_path / "bare.json").unlink()
    q = load_problem(path)
    assert np.array_equal(p.a, q.a) and np.array_equal(p.b, q.b)
    assert q.xstar is None and q.kappa_by_construction is None
