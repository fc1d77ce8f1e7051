"""Seeded Lloyd k-means producing one partition per sampling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mlrisk.constants import KMEANS_ITER_MAX, KMEANS_RESTARTS


class ClusteringError(RuntimeError):
    pass


class EmptyClusterError(ClusteringError):
    """Raised when a cluster stays empty after every restart."""


@dataclass(frozen=True)
class Clustering:
    """A surjective map from N assets onto K clusters.

    Labels are 0-based: ``assignment[i]`` is in ``range(K)``.
    """

    assignment: np.ndarray
    K: int
    n_iter: int = 0
    initial_assignment: np.ndarray | None = field(default=None, repr=False, compare=False)
    trace: tuple[float, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.intp)
        if a.ndim != 1:
            raise ValueError("assignment must be a vector")
        if self.K < 1 or a.min() < 0 or a.max() >= self.K:
            raise ValueError(f"labels must lie in [0, {self.K})")
        if np.any(np.bincount(a, minlength=self.K) == 0):
            raise ValueError("every cluster must have at least one member")
        a.setflags(write=False)
        object.__setattr__(self, "assignment", a)

    @classmethod
    def from_labels(cls, labels) -> Clustering:
        """Build a clustering from arbitrary hashable labels, relabelled by first appearance."""
        _, first, inv = np.unique(np.asarray(labels), return_index=True, return_inverse=True)
        order = np.argsort(np.argsort(first))
        return cls(assignment=order[inv.ravel()], K=len(first))

    @property
    def n(self) -> int:
        return self.assignment.shape[0]

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.K)

    @property
    def members(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.assignment == a) for a in range(self.K)]

    def __eq__(self, other):
        if not isinstance(other, Clustering):
            return NotImplemented
        return self.K == other.K and np.array_equal(self.assignment, other.assignment)

    def __hash__(self):
        return hash((self.K, self.assignment.tobytes()))


def cluster_centers(X: np.ndarray, assignment: np.ndarray, K: int) -> np.ndarray:
    """Per-cluster column means."""
    sums = np.zeros((K, X.shape[1]))
    np.add.at(sums, assignment, X)
    counts = np.bincount(assignment, minlength=K).astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        return sums / counts[:, None]


def objective(X, c: Clustering) -> float:
    """Within-cluster sum of squared Euclidean distances to the cluster means."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != c.n:
        raise ValueError(f"X has {X.shape[0] if X.ndim else 0} rows, clustering covers {c.n}")
    centers = cluster_centers(X, c.assignment, c.K)
    return float(np.sum((X - centers[c.assignment]) ** 2))


def _sq_dist(X, x_sq, centers):
    d = x_sq[:, None] - 2.0 * (X @ centers.T) + np.einsum("ij,ij->i", centers, centers)[None, :]
    np.maximum(d, 0.0, out=d)
    return d


def _reseat_empty(X, labels, centers, K):
    """Move the worst-fitted point into each empty cluster.

    The donor is the point farthest from its own center among clusters with
    at least two members, which cannot increase the objective.
    """
    counts = np.bincount(labels, minlength=K)
    empty = np.flatnonzero(counts == 0)
    if empty.size == 0:
        return labels, False
    labels = labels.copy()
    own = np.sum((X - centers[labels]) ** 2, axis=1)
    for a in empty:
        movable = counts[labels] > 1
        if not movable.any():
            break
        cand = np.where(movable, own, -np.inf)
        i = int(np.argmax(cand))
        counts[labels[i]] -= 1
        counts[a] += 1
        labels[i] = a
        own[i] = 0.0
    return labels, True


def _lloyd(X, K, rng, iter_max):
    n = X.shape[0]
    x_sq = np.einsum("ij,ij->i", X, X)
    idx = rng.choice(n, size=K, replace=False)
    centers = X[idx].copy()
    labels = np.argmin(_sq_dist(X, x_sq, centers), axis=1)
    initial = labels.copy()
    trace = []
    n_iter = 0
    for n_iter in range(1, iter_max + 1):
        labels, _ = _reseat_empty(X, labels, centers, K)
        centers = cluster_centers(X, labels, K)
        trace.append(float(np.sum((X - centers[labels]) ** 2)))
        new = np.argmin(_sq_dist(X, x_sq, centers), axis=1)
        if np.array_equal(new, labels):
            break
        # Lloyd reassignment only moves points to a closer center; guard
        # against round-off in the expanded distance flipping exact ties.
        d_old = np.sum((X - centers[labels]) ** 2, axis=1)
        d_new = np.sum((X - centers[new]) ** 2, axis=1)
        new = np.where(d_new < d_old, new, labels)
        if np.array_equal(new, labels):
            break
        labels = new
    labels, _ = _reseat_empty(X, labels, centers, K)
    return labels, initial, n_iter, trace


def kmeans_cluster(X, K: int, seed=None, iter_max: int = KMEANS_ITER_MAX,
                   restarts: int = KMEANS_RESTARTS) -> Clustering:
    """Partition the rows of ``X`` into ``K`` clusters with Lloyd's algorithm.

    Initial centers are ``K`` distinct rows drawn uniformly without
    replacement (Forgy). Iteration stops when a sweep changes no assignment
    or after ``iter_max`` sweeps. Clusters that empty out are reseated; if a
    run still ends with an empty cluster it is restarted from fresh centers,
    up to ``restarts`` times.

    Parameters
    ----------
    X : array_like, shape (N, d)
    K : int
        Number of clusters, ``1 <= K <= N``.
    seed : int, SeedSequence or Generator, optional
        Same seed and inputs give the same partition.
    iter_max : int
        Cap on the number of Lloyd sweeps.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be a 2-d matrix")
    n = X.shape[0]
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite values")
    if K < 1 or K > n:
        raise ValueError(f"need 1 <= K <= N, got K={K}, N={n}")
    if iter_max < 1:
        raise ValueError("iter_max must be at least 1")
    rng = np.random.default_rng(seed)
    for _ in range(restarts + 1):
        labels, initial, n_iter, trace = _lloyd(X, K, rng, iter_max)
        if np.all(np.bincount(labels, minlength=K) > 0):
            return Clustering(assignment=labels, K=K, n_iter=n_iter,
                              initial_assignment=initial, trace=tuple(trace))
    raise EmptyClusterError(f"cluster left empty after {restarts} restarts (N={n}, K={K})")
