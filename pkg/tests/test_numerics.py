import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mvopr.numerics import (CovarianceSpec, InvalidSpecError, RngStream, build_covariance,
                            sample_mvn, thin_svd)


def test_identity_covariance():
    np.testing.assert_array_equal(build_covariance(CovarianceSpec(), 3), np.eye(3))


def test_ar1_entry():
    cov = build_covariance(CovarianceSpec("ar1", 0.9), 5)
    assert cov[0, 2] == pytest.approx(0.81)


def test_compound_symmetry_entry():
    cov = build_covariance(CovarianceSpec("compound_symmetry", 0.7), 6)
    assert cov[1, 4] == 0.7
    assert np.all(np.diag(cov) == 1)


@pytest.mark.parametrize("spec", [CovarianceSpec("ar1", 1.0), CovarianceSpec("ar1", -1.2),
                                  CovarianceSpec("compound_symmetry", 1.0),
                                  CovarianceSpec("compound_symmetry", -0.1),
                                  CovarianceSpec("toeplitz", 0.3)])
def test_invalid_specs(spec):
    with pytest.raises(InvalidSpecError):
        build_covariance(spec, 4)


@settings(max_examples=40, deadline=None)
@given(kind=st.sampled_from(["identity", "ar1", "compound_symmetry"]),
       param=st.floats(0.0, 0.95), dim=st.integers(1, 12))
def test_covariance_symmetric_pd(kind, param, dim):
    cov = build_covariance(CovarianceSpec(kind, param), dim)
    assert np.array_equal(cov, cov.T)
    np.linalg.cholesky(cov)
    assert np.all(np.diag(cov) == 1)


def test_sample_mvn_bitwise_reproducible():
    a = sample_mvn(5, 3, CovarianceSpec(), RngStream(7))
    b = sample_mvn(5, 3, CovarianceSpec(), RngStream(7))
    assert np.array_equal(a, b)


def test_streams_differ():
    a = sample_mvn(5, 3, CovarianceSpec(), RngStream(7, 0))
    b = sample_mvn(5, 3, CovarianceSpec(), RngStream(7, 1))
    assert not np.array_equal(a, b)


def test_sample_mvn_ar1_correlation():
    x = sample_mvn(10_000, 2, CovarianceSpec("ar1", 0.9), RngStream(3))
    assert abs(np.corrcoef(x.T)[0, 1] - 0.9) <= 0.05


def test_sample_mvn_degenerate():
    x = sample_mvn(1, 1, CovarianceSpec(), RngStream(1))
    assert x.shape == (1, 1) and np.isfinite(x[0, 0])


def test_thin_svd_diagonal():
    svd = thin_svd(np.diag([3.0, 2.0, 1.0]), 2)
    np.testing.assert_allclose(svd.singular_values, [3, 2])


def test_thin_svd_rank_one(rng):
    u = rng.standard_normal(6)
    v = rng.standard_normal(4)
    u /= np.linalg.norm(u)
    v /= np.linalg.norm(v)
    m = np.outer(u, v)
    svd = thin_svd(m, 1)
    assert svd.singular_values[0] == pytest.approx(1.0)
    assert np.linalg.norm(m - svd.reconstruct()) <= 1e-10


def test_thin_svd_full_rank(rng):
    m = rng.standard_normal((20, 8))
    svd = thin_svd(m, 8)
    assert np.linalg.norm(m - svd.reconstruct()) <= 1e-8 * np.linalg.norm(m)
    assert np.max(np.abs(svd.u.T @ svd.u - np.eye(8))) <= 1e-10
    assert np.max(np.abs(svd.v.T @ svd.v - np.eye(8))) <= 1e-10
    assert np.all(np.diff(svd.singular_values) <= 0)


def test_thin_svd_rank_too_large():
    with pytest.raises(ValueError):
        thin_svd(np.ones((3, 2)), 3)
