"""Sketch operators: shapes, exactness of the structured transform, embedding quality."""

import numpy as np
import pytest

from sketchlsq.errors import DimensionError
from sketchlsq.linalg import haar_orthonormal, singular_values
from sketchlsq.sketching import (
    apply_sketch,
    make_gaussian_sketch,
    make_srct_sketch,
    materialize,
)

M, S = 512, 96


def test_gaussian_sketch_shape_and_variance():
    sk = make_gaussian_sketch(S, M, np.random.default_rng(0))
    dense = materialize(sk)
    assert dense.shape == (S, M)
    # entries are N(0, 1/s) so squared row norms concentrate near m/s
    assert np.mean(dense**2) == pytest.approx(1.0 / S, rel=0.1)


def test_srct_rows_orthogonal_with_exact_norm():
    sk = make_srct_sketch(S, M, np.random.default_rng(1))
    dense = materialize(sk)
    gram = dense @ dense.T
    # sampled rows of an orthonormal transform: S S^T = (m/s) I exactly
    np.testing.assert_allclose(gram, (M / S) * np.eye(S), atol=1e-12)
    assert sk.scale == pytest.approx(np.sqrt(M / S))


def test_srct_sample_indices_distinct():
    sk = make_srct_sketch(S, M, np.random.default_rng(2))
    assert len(set(sk.sample_indices.tolist())) == S
    assert set(np.unique(sk.signs)) <= {-1.0, 1.0}


@pytest.mark.parametrize("maker", [make_gaussian_sketch, make_srct_sketch])
def test_apply_matches_materialized_product(maker):
    rng = np.random.default_rng(3)
    sk = maker(S, M, rng)
    a = rng.standard_normal((M, 7))
    v = rng.standard_normal(M)
    dense = materialize(sk)
    np.testing.assert_allclose(apply_sketch(sk, a), dense @ a, atol=1e-10)
    np.testing.assert_allclose(apply_sketch(sk, v), dense @ v, atol=1e-10)


@pytest.mark.parametrize("maker", [make_gaussian_sketch, make_srct_sketch])
def test_subspace_embedding_distortion(maker):
    """Singular values of S Q stay in a fixed band at 8x oversampling."""
    n = 12
    q = haar_orthonormal(M, n, np.random.default_rng(4))
    worst_lo, worst_hi = 1.0, 1.0
    for seed in range(10):
        sk = maker(8 * n, M, np.random.default_rng(100 + seed))
        sv = singular_values(apply_sketch(sk, q))
        worst_lo = min(worst_lo, sv[-1])
        worst_hi = max(worst_hi, sv[0])
    assert 0.5 < worst_lo <= worst_hi < 1.5


def test_sketch_determinism_per_seed():
    a = np.random.default_rng(5).standard_normal((M, 4))
    s1 = apply_sketch(make_srct_sketch(S, M, np.random.default_rng(6)), a)
    s2 = apply_sketch(make_srct_sketch(S, M, np.random.default_rng(6)), a)
    s3 = apply_sketch(make_srct_sketch(S, M, np.random.default_rng(7)), a)
    assert np.array_equal(s1, s2)
    assert not np.array_equal(s1, s3)


@pytest.mark.parametrize("s,m", [(0, 10), (10, 10), (11, 10), (-1, 5)])
def test_dimension_validation(s, m):
    with pytest.raises(DimensionError):
        make_srct_sketch(s, m, np.random.default_rng(0))


def test_apply_rejects_wrong_row_count():
    sk = make_srct_sketch(8, 32, np.random.default_rng(0))
    with pytest.raises(DimensionError):
        apply_sketch(sk, np.ones((31, 2)))
