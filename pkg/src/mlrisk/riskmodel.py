"""Model covariance assembly, inversion and the end-to-end pipeline."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from mlrisk import constants
from mlrisk.ensemble import Clusterer, EnsembleConfig, default_clusterer, iterate_model
from mlrisk.ingest import ReturnPanel, normalize_returns
from mlrisk.spectrum import SpectrumSummary, regularize, summarize


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    pass


class PipelineError(RuntimeError):
    """A failure inside :func:`build_model`, tagged with the stage it came from."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


def assemble_covariance(psi, sigma) -> np.ndarray:
    """Scale a correlation matrix by volatilities: ``sigma_i * sigma_j * psi_ij``."""
    psi = np.asarray(psi, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if psi.ndim != 2 or psi.shape != (sigma.size, sigma.size):
        raise ValueError(f"correlation is {psi.shape}, got {sigma.size} volatilities")
    if not np.all(sigma > 0):
        raise ValueError("volatilities must be positive")
    return psi * np.outer(sigma, sigma)


def invert_spd(g) -> np.ndarray:
    """Invert a symmetric positive-definite matrix through its Cholesky factor."""
    g = np.asarray(g, dtype=float)
    try:
        factor = cho_factor(g, lower=True, check_finite=True)
    except LinAlgError as exc:
        raise NotPositiveDefiniteError(
            "matrix is not positive definite; enable a regularization method ('tail' or 'rescale')"
        ) from exc
    inv = cho_solve(factor, np.eye(g.shape[0]))
    return 0.5 * (inv + inv.T)


@dataclass
class RiskModelOutput:
    inverse_covariance: np.ndarray
    sigma: np.ndarray
    summary: SpectrumSummary
    config: EnsembleConfig
    correlation: np.ndarray = field(repr=False)
    tickers: tuple[str, ...] = ()
    provenance: dict = field(default_factory=dict)

    def report(self) -> dict:
        """JSON-ready description of the run (no matrices)."""
        cfg = {k: v for k, v in asdict(self.config).items() if not k.startswith("_")}
        if cfg["weights"] is not None:
            cfg["weights"] = [float(x) for x in cfg["weights"]]
        return {
            "n_assets": int(self.sigma.size),
            "eigenvalue_summary": self.summary.as_dict(),
            "config": cfg,
            "provenance": self.provenance,
        }


def build_model(panel: ReturnPanel, cfg: EnsembleConfig,
                clusterer: Clusterer = default_clusterer) -> RiskModelOutput:
    """Returns panel in, inverse model covariance out.

    normalize -> ``cfg.iterations`` passes of sampling averaging ->
    optional tail deformation -> scale by sample volatilities -> invert.
    """
    timings = {}

    def stage(name, fn, *args):
        t0 = time.perf_counter()
        try:
            return fn(*args)
        except PipelineError:
            raise
        except Exception as exc:
            raise PipelineError(name, exc) from exc
        finally:
            timings[name] = time.perf_counter() - t0

    stage("config", cfg.check_assets, panel.n_assets)
    normalized = stage("normalize", normalize_returns, panel)
    psi = stage("ensemble", lambda: iterate_model(panel, cfg, clusterer, normalized))
    psi = stage("regularize", regularize, psi, cfg.regularization, cfg.rounding)
    gamma = stage("assemble", assemble_covariance, psi, panel.volatilities)
    inv = stage("invert", invert_spd, gamma)
    summary = stage("summarize", summarize, psi, cfg.rounding)
    provenance = {
        "master_seed": cfg.master_seed,
        "seed_derivation": "SeedSequence(master_seed, spawn_key=(pass, m))",
        "passes": cfg.iterations,
        "samplings_per_pass": cfg.M,
        "regularization": cfg.regularization,
        "erank_rounding": cfg.rounding,
        "mad_scale": normalized.mad_scale,
        "scale_floor": normalized.scale_floor,
        "quantile_method": constants.QUANTILE_METHOD,
        "timings_sec": timings,
    }
    return RiskModelOutput(
        inverse_covariance=inv,
        sigma=np.asarray(panel.volatilities),
        summary=summary,
        config=cfg,
        correlation=psi,
        tickers=panel.tickers,
        provenance=provenance,
    )
