"""One incomplete heterotic factor model ("sampling") per clustering.

Within each cluster the loadings are the first principal component of the
cluster's block of the base correlation matrix. The factor covariance is
the base matrix projected on those loadings, and the specific variance
restores the unit diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mlrisk.clustering import Clustering
from mlrisk.constants import DIAG_TOL, PSD_TOL, SPECIFIC_VARIANCE_TOL, SYMMETRY_TOL


def symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def check_correlation(psi: np.ndarray, psd: bool = True) -> None:
    """Raise ``ValueError`` unless ``psi`` is a valid correlation matrix."""
    psi = np.asarray(psi)
    if psi.ndim != 2 or psi.shape[0] != psi.shape[1]:
        raise ValueError(f"correlation matrix must be square, got {psi.shape}")
    if not np.all(np.isfinite(psi)):
        raise ValueError("correlation matrix has non-finite entries")
    if np.max(np.abs(np.diag(psi) - 1.0)) > DIAG_TOL:
        raise ValueError("correlation matrix diagonal is not 1")
    if np.max(np.abs(psi - psi.T)) > SYMMETRY_TOL:
        raise ValueError("correlation matrix is not symmetric")
    if psd and np.linalg.eigvalsh(psi)[0] < PSD_TOL:
        raise ValueError("correlation matrix is not positive semi-definite")


@dataclass(frozen=True)
class SamplingModel:
    correlation: np.ndarray
    loadings_vector: np.ndarray
    specific_variance: np.ndarray
    factor_cov: np.ndarray
    cluster_eigs: np.ndarray
    clustering: Clustering

    def loadings_matrix(self) -> np.ndarray:
        """The N x K loadings matrix with one nonzero per row."""
        n = self.loadings_vector.shape[0]
        omega = np.zeros((n, self.clustering.K))
        omega[np.arange(n), self.clustering.assignment] = self.loadings_vector
        return omega


def cluster_pc(block) -> tuple[np.ndarray, float]:
    """Top eigenpair of a symmetric block.

    Returns a unit-norm eigenvector (sign arbitrary) and the largest
    eigenvalue.
    """
    block = np.asarray(block, dtype=float)
    if block.ndim != 2 or block.shape[0] != block.shape[1] or block.shape[0] == 0:
        raise ValueError(f"block must be a non-empty square matrix, got {block.shape}")
    if not np.all(np.isfinite(block)):
        raise ValueError("block has non-finite entries")
    if block.shape[0] == 1:
        return np.ones(1), float(block[0, 0])
    w, v = np.linalg.eigh(symmetrize(block))
    return v[:, -1].copy(), float(w[-1])


def _group_sums(w: np.ndarray, order: np.ndarray, starts: np.ndarray) -> np.ndarray:
    """Sum ``w`` over cluster blocks on both axes in O(N^2)."""
    ws = w[np.ix_(order, order)]
    ws = np.add.reduceat(ws, starts, axis=0)
    return np.add.reduceat(ws, starts, axis=1)


def build_sampling(base, c: Clustering) -> SamplingModel:
    """Build the heterotic model correlation for one clustering.

    Parameters
    ----------
    base : array_like, shape (N, N)
        Correlation matrix the model is fitted to. It is symmetrized first.
    c : Clustering
        Partition of the N assets.
    """
    base = np.asarray(base, dtype=float)
    if base.ndim != 2 or base.shape[0] != base.shape[1]:
        raise ValueError(f"base must be square, got {base.shape}")
    n = base.shape[0]
    if c.n != n:
        raise ValueError(f"clustering covers {c.n} assets, base matrix is {n} x {n}")
    base = symmetrize(base)

    g = c.assignment
    u = np.empty(n)
    lam = np.empty(c.K)
    for a, idx in enumerate(c.members):
        u[idx], lam[a] = cluster_pc(base[np.ix_(idx, idx)])

    order = np.argsort(g, kind="stable")
    starts = np.concatenate(([0], np.cumsum(c.sizes)[:-1]))
    phi = symmetrize(_group_sums(base * np.outer(u, u), order, starts))

    psi = np.outer(u, u) * phi[np.ix_(g, g)]
    np.fill_diagonal(psi, 1.0)
    xi2 = 1.0 - lam[g] * u ** 2
    if xi2.min() < SPECIFIC_VARIANCE_TOL:
        raise ValueError(f"negative specific variance {xi2.min():.3g}; base matrix is not PSD")
    return SamplingModel(
        correlation=psi,
        loadings_vector=u,
        specific_variance=xi2,
        factor_cov=phi,
        cluster_eigs=lam,
        clustering=c,
    )
