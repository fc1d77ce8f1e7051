import numpy as np
import pytest

from mlrisk.clustering import Clustering
from mlrisk.ensemble import EnsembleConfig, sample_correlation
from mlrisk.heterotic import build_sampling
from mlrisk.ingest import make_panel, normalize_returns
from mlrisk.clustering import kmeans_cluster
from mlrisk.ensemble import sampling_seed
from mlrisk.riskmodel import (
    NotPositiveDefiniteError,
    PipelineError,
    assemble_covariance,
    build_model,
    invert_spd,
)
from mlrisk.spectrum import deform_tail
from mlrisk.synth import synth_returns


def test_assemble_examples(rng):
    np.testing.assert_array_equal(assemble_covariance(np.eye(2), [2.0, 3.0]), np.diag([4.0, 9.0]))
    psi = np.array([[1.0, 0.3], [0.3, 1.0]])
    np.testing.assert_array_equal(assemble_covariance(psi, [1.0, 1.0]), psi)
    a = rng.normal(size=(5, 5))
    s = rng.uniform(0.01, 0.1, 5)
    g = assemble_covariance(a, s)
    for i in range(5):
        for j in range(5):
            assert g[i, j] == pytest.approx(s[i] * s[j] * a[i, j], rel=1e-15)
    with pytest.raises(ValueError):
        assemble_covariance(np.eye(3), [1.0, 1.0])


def test_invert_examples(rng):
    np.testing.assert_allclose(invert_spd(np.diag([4.0, 9.0])), np.diag([0.25, 1 / 9]))
    np.testing.assert_allclose(invert_spd(np.eye(3)), np.eye(3))
    a = rng.normal(size=(6, 6))
    g = a.T @ a + np.eye(6)
    np.testing.assert_allclose(g @ invert_spd(g), np.eye(6), atol=1e-10)


def test_invert_rejects_indefinite():
    with pytest.raises(NotPositiveDefiniteError, match="regularization"):
        invert_spd(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_pipeline_matches_stagewise_composition():
    tickers, r, _ = synth_returns(4, 8, 2, seed=3)
    panel = make_panel(r, tickers)
    cfg = EnsembleConfig(K=2, M=1, master_seed=17)
    out = build_model(panel, cfg)
    X = normalize_returns(panel).values
    c = kmeans_cluster(X, 2, seed=sampling_seed(17, 0, 0))
    psi = build_sampling(sample_correlation(panel), c).correlation
    gamma = assemble_covariance(psi, r.std(axis=1, ddof=1))
    np.testing.assert_allclose(out.inverse_covariance, np.linalg.inv(gamma), rtol=1e-9)
    np.testing.assert_allclose(out.correlation, psi, atol=1e-15)


def test_tail_regularization_noop_without_tail(rng):
    # Two assets: the spectrum is (1 + rho, 1 - rho), so at most one
    # eigenvalue is <= 1 and the tail is empty.
    panel = make_panel(rng.normal(size=(2, 10)))
    base = build_model(panel, EnsembleConfig(K=1, M=3, master_seed=1))
    tail = build_model(panel, EnsembleConfig(K=1, M=3, master_seed=1, regularization="tail"))
    assert base.summary.n_star == 0
    np.testing.assert_array_equal(tail.inverse_covariance, base.inverse_covariance)


def test_mid_scale_model(medium_panel):
    out = build_model(medium_panel, EnsembleConfig(K=10, M=10, master_seed=0))
    gamma = assemble_covariance(out.correlation, out.sigma)
    np.testing.assert_allclose(gamma @ out.inverse_covariance, np.eye(100), atol=1e-8)
    np.linalg.cholesky(out.inverse_covariance)
    assert out.summary.mean == pytest.approx(1.0, abs=1e-10)
    inv = out.inverse_covariance
    assert np.max(np.abs(inv - inv.T)) <= 1e-10 * np.max(np.abs(inv))


@pytest.mark.parametrize("reg", ["tail", "rescale"])
def test_regularized_models(medium_panel, reg):
    out = build_model(medium_panel, EnsembleConfig(K=30, M=5, master_seed=0, regularization=reg))
    assert np.max(np.abs(np.diag(out.correlation) - 1)) <= 1e-10
    assert out.summary.mean == pytest.approx(1.0, abs=1e-10)
    assert out.provenance["regularization"] == reg


def test_determinism(medium_panel):
    cfg = EnsembleConfig(K=10, M=4, master_seed=42)
    a = build_model(medium_panel, cfg)
    b = build_model(medium_panel, cfg)
    np.testing.assert_array_equal(a.inverse_covariance, b.inverse_covariance)


def test_single_sampling_configuration(small_panel):
    cfg = EnsembleConfig(K=4, M=1, master_seed=8)
    labels = np.arange(small_panel.n_assets) % 4
    out = build_model(small_panel, cfg, clusterer=lambda X, K, s, it: Clustering(labels, 4))
    psi = build_sampling(sample_correlation(small_panel), Clustering(labels, 4)).correlation
    np.testing.assert_allclose(out.correlation, psi, atol=1e-15)


def test_stage_tagged_errors(small_panel):
    with pytest.raises(PipelineError) as ei:
        build_model(small_panel, EnsembleConfig(K=small_panel.n_assets))
    assert ei.value.stage == "config"

    def boom(X, K, seed, iter_max):
        raise RuntimeError("no clusters today")

    with pytest.raises(PipelineError) as ei:
        build_model(small_panel, EnsembleConfig(K=3, M=1), clusterer=boom)
    assert ei.value.stage == "ensemble"
    assert "[ensemble]" in str(ei.value)


def test_report_is_json_ready(small_panel):
    import json

    out = build_model(small_panel, EnsembleConfig(K=4, M=2, master_seed=3))
    rep = json.loads(json.dumps(out.report()))
    assert rep["config"]["K"] == 4
    assert rep["eigenvalue_summary"]["Mean"] == pytest.approx(1.0)
    assert rep["provenance"]["mad_scale"] == 1.4826
