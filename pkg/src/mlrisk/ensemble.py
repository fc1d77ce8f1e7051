"""Averaging many clustering-based samplings into one model correlation matrix."""

from __future__ import annotations

import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from mlrisk.clustering import Clustering, kmeans_cluster
from mlrisk.constants import KMEANS_ITER_MAX, WEIGHT_SUM_TOL
from mlrisk.heterotic import SamplingModel, build_sampling
from mlrisk.ingest import NormalizedReturns, ReturnPanel, normalize_returns

REGULARIZATIONS = ("none", "tail", "rescale")

# (X, K, seed, iter_max) -> Clustering
Clusterer = Callable[[np.ndarray, int, np.random.SeedSequence, int], Clustering]


@dataclass(frozen=True)
class EnsembleConfig:
    """Settings for the sampling ensemble.

    ``weights`` defaults to uniform ``1/M``. ``threads`` only affects speed,
    never results.
    """

    K: int
    M: int = 100
    weights: Sequence[float] | None = None
    iterations: int = 1
    iter_max: int = KMEANS_ITER_MAX
    master_seed: int = 0
    regularization: str = "none"
    rounding: str = "floor"
    threads: int | None = None
    _weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"K must be at least 1, got {self.K}")
        if self.M < 1:
            raise ValueError(f"M must be at least 1, got {self.M}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be at least 1, got {self.iterations}")
        if self.iter_max < 1:
            raise ValueError(f"iter_max must be at least 1, got {self.iter_max}")
        if self.regularization not in REGULARIZATIONS:
            raise ValueError(f"regularization must be one of {REGULARIZATIONS}, got {self.regularization!r}")
        if self.rounding not in ("floor", "round"):
            raise ValueError(f"rounding must be 'floor' or 'round', got {self.rounding!r}")
        if self.master_seed < 0:
            raise ValueError("master_seed must be non-negative")
        if self.threads is not None and self.threads < 1:
            raise ValueError("threads must be at least 1")
        if self.weights is None:
            w = np.full(self.M, 1.0 / self.M)
        else:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (self.M,):
                raise ValueError(f"expected {self.M} weights, got shape {w.shape}")
            if not np.all(w > 0):
                raise ValueError("weights must be strictly positive")
            if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
                raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        w.setflags(write=False)
        object.__setattr__(self, "_weights", w)

    @property
    def weight_vector(self) -> np.ndarray:
        return self._weights

    def check_assets(self, n: int) -> None:
        if not self.K < n:
            raise ValueError(f"need K < N, got K={self.K}, N={n}")

    def worker_count(self) -> int:
        return self.threads or os.cpu_count() or 1


def sampling_seed(master_seed: int, pass_index: int, m: int) -> np.random.SeedSequence:
    """Seed for sampling ``m`` of pass ``pass_index``; independent of scheduling."""
    return np.random.SeedSequence(master_seed, spawn_key=(pass_index, m))


def default_clusterer(X, K, seed, iter_max) -> Clustering:
    return kmeans_cluster(X, K, seed=seed, iter_max=iter_max)


def iter_samplings(base, cluster_input, cfg: EnsembleConfig, pass_index: int = 0,
                   clusterer: Clusterer = default_clusterer) -> Iterator[SamplingModel]:
    """Yield the ``M`` samplings of one pass, in index order.

    Samplings are computed on a thread pool with a bounded number in flight,
    so memory stays at a few N x N matrices regardless of ``M``.
    """
    base = np.asarray(base, dtype=float)
    X = cluster_input.values if isinstance(cluster_input, NormalizedReturns) else np.asarray(cluster_input, dtype=float)
    n = base.shape[0]
    if base.shape != (n, n) or X.shape[0] != n:
        raise ValueError(f"base is {base.shape}, clustering input has {X.shape[0]} rows")
    cfg.check_assets(n)

    def one(m: int) -> SamplingModel:
        c = clusterer(X, cfg.K, sampling_seed(cfg.master_seed, pass_index, m), cfg.iter_max)
        return build_sampling(base, c)

    workers = min(cfg.worker_count(), cfg.M)
    if workers == 1:
        for m in range(cfg.M):
            yield one(m)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        pending = deque()
        next_m = 0
        while next_m < cfg.M or pending:
            while next_m < cfg.M and len(pending) < 2 * workers:
                pending.append(pool.submit(one, next_m))
                next_m += 1
            yield pending.popleft().result()


def average_samplings(base, cluster_input, cfg: EnsembleConfig, pass_index: int = 0,
                      clusterer: Clusterer = default_clusterer,
                      on_sampling: Callable[[int, SamplingModel], None] | None = None) -> np.ndarray:
    """Weighted average of the ``M`` sampling correlation matrices.

    Accumulation runs in sampling-index order, so the result does not depend
    on the number of worker threads. ``on_sampling`` is called with each
    sampling as it is folded in.
    """
    w = cfg.weight_vector
    acc = None
    for m, s in enumerate(iter_samplings(base, cluster_input, cfg, pass_index, clusterer)):
        if on_sampling is not None:
            on_sampling(m, s)
        if acc is None:
            acc = w[m] * s.correlation
        else:
            acc += w[m] * s.correlation
    acc = 0.5 * (acc + acc.T)
    np.fill_diagonal(acc, 1.0)
    return acc


def sample_correlation(panel: ReturnPanel) -> np.ndarray:
    """Pearson correlation between the return series of the panel's assets."""
    r = panel.returns - panel.returns.mean(axis=1, keepdims=True)
    r = r / np.sqrt(np.sum(r * r, axis=1, keepdims=True))
    psi = r @ r.T
    psi = 0.5 * (psi + psi.T)
    np.fill_diagonal(psi, 1.0)
    return psi


def iterate_model(panel: ReturnPanel, cfg: EnsembleConfig, clusterer: Clusterer = default_clusterer,
                  cluster_input: NormalizedReturns | None = None) -> np.ndarray:
    """Run ``cfg.iterations`` passes of sampling averaging.

    Pass 1 starts from the sample correlation matrix; later passes fit the
    samplings to the previous pass's output. Every pass clusters the same
    normalized returns of the original panel.
    """
    if cluster_input is None:
        cluster_input = normalize_returns(panel)
    psi = sample_correlation(panel)
    for p in range(cfg.iterations):
        psi = average_samplings(psi, cluster_input, cfg, pass_index=p, clusterer=clusterer)
    return psi
