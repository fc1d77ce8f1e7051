import numpy as np
import pytest

from mlrisk.clustering import Clustering
from mlrisk.heterotic import build_sampling, check_correlation, cluster_pc
from conftest import assert_correlation
from oracles import heterotic_loops, random_correlation


def test_cluster_pc_exchangeable():
    u, lam = cluster_pc([[1.0, 0.5], [0.5, 1.0]])
    assert lam == pytest.approx(1.5)
    np.testing.assert_allclose(np.abs(u), [2 ** -0.5] * 2)


def test_cluster_pc_scalar():
    u, lam = cluster_pc([[1.0]])
    assert lam == 1.0 and abs(u[0]) == 1.0


def test_cluster_pc_matches_dense_solver(rng):
    a = rng.normal(size=(5, 5))
    block = a @ a.T
    u, lam = cluster_pc(block)
    w, v = np.linalg.eig(block)
    top = np.argmax(w.real)
    assert lam == pytest.approx(w.real[top], rel=1e-12)
    assert abs(abs(u @ v[:, top].real) - 1.0) < 1e-10
    assert np.linalg.norm(u) == pytest.approx(1.0)


def test_cluster_pc_rejects_nonfinite():
    with pytest.raises(ValueError):
        cluster_pc([[1.0, np.nan], [np.nan, 1.0]])


def test_two_asset_one_cluster():
    s = build_sampling([[1.0, 0.5], [0.5, 1.0]], Clustering(np.array([0, 0]), 1))
    assert s.cluster_eigs[0] == pytest.approx(1.5)
    np.testing.assert_allclose(s.specific_variance, [0.25, 0.25])
    np.testing.assert_allclose(s.correlation, [[1.0, 0.75], [0.75, 1.0]])


def test_singletons_reproduce_base(rng):
    base = random_correlation(rng, 6)
    s = build_sampling(base, Clustering(np.arange(6), 6))
    np.testing.assert_allclose(s.cluster_eigs, 1.0)
    np.testing.assert_allclose(s.specific_variance, 0.0, atol=1e-15)
    np.testing.assert_allclose(s.correlation, base, atol=1e-15)


def test_matches_loop_oracle(rng):
    base = random_correlation(rng, 6, t=10)
    labels = np.array([0, 1, 0, 1, 1, 0])
    s = build_sampling(base, Clustering(labels, 2))
    ref, phi, lam, xi2 = heterotic_loops(base.tolist(), labels.tolist(), 2)
    np.testing.assert_allclose(s.correlation, ref, atol=1e-12, rtol=0)
    np.testing.assert_allclose(s.cluster_eigs, lam, rtol=1e-12)
    np.testing.assert_allclose(s.specific_variance, xi2, atol=1e-12)


def test_model_invariants(rng):
    base = random_correlation(rng, 30, t=12)
    labels = np.concatenate([np.arange(5), rng.integers(0, 5, 25)])
    s = build_sampling(base, Clustering(labels, 5))
    np.testing.assert_allclose(np.diag(s.factor_cov), s.cluster_eigs, atol=1e-10)
    np.testing.assert_allclose(s.specific_variance, 1 - s.cluster_eigs[labels] * s.loadings_vector ** 2)
    assert s.specific_variance.min() >= -1e-10
    assert np.all(np.diag(s.correlation) == 1.0)
    omega = s.loadings_matrix()
    np.testing.assert_allclose(s.correlation,
                               np.diag(s.specific_variance) + omega @ s.factor_cov @ omega.T, atol=1e-12)
    assert np.linalg.eigvalsh(s.correlation)[0] >= -1e-10
    assert_correlation(s.correlation)
    check_correlation(s.correlation)


def test_positive_definite_when_specific_variances_positive(rng):
    base = random_correlation(rng, 12, t=40)
    s = build_sampling(base, Clustering(np.repeat(np.arange(3), 4), 3))
    assert s.specific_variance.min() > 0
    assert np.linalg.eigvalsh(s.correlation)[0] > 0


def test_dimension_mismatch(rng):
    with pytest.raises(ValueError):
        build_sampling(np.eye(4), Clustering(np.arange(3), 3))
