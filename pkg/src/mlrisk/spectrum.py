"""Effective rank, eigenvalue tail deformations and eigenvalue summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from mlrisk.constants import EIG_CLAMP, FLAT_TAIL_TOL, QUANTILE_METHOD
from mlrisk.heterotic import symmetrize


def erank(values) -> float:
    """Exponential of the Shannon entropy of the normalized positive values."""
    x = np.asarray(values, dtype=float).ravel()
    x = x[x > 0]
    if x.size == 0:
        raise ValueError("erank needs at least one positive value")
    p = x / x.sum()
    return math.exp(-float(np.sum(p * np.log(p))))


def erank_with_head(values) -> float:
    """Effective rank of the values not above 1, plus the count of those above 1.

    Values above 1 (positive log) are counted rather than entered into the
    entropy, so ``len(values) - floor(erank_with_head(values))`` is the tail
    size.
    """
    x = np.asarray(values, dtype=float).ravel()
    take = np.log(np.where(x > 0, x, 1.0)) > 0
    rest = x[~take]
    rest = rest[rest > 0]
    er = erank(rest) if rest.size else 0.0
    return er + int(take.sum())


def _descending(values) -> np.ndarray:
    return np.sort(np.asarray(values, dtype=float).ravel(), kind="stable")[::-1]


def tail_size(values, rounding: str = "floor") -> tuple[int, float]:
    """Number of tail eigenvalues to flatten and the level to flatten them to.

    The tail candidates are the eigenvalues not exceeding 1. Their effective
    rank (floored, or rounded) is how many of them are kept; the rest, the
    smallest ones, form the tail. Returns ``(n_star, lambda_star)`` where
    ``lambda_star`` is the largest tail eigenvalue (``nan`` when the tail is
    empty).
    """
    lam = _descending(values)
    if lam.size == 0:
        return 0, math.nan
    clamp = EIG_CLAMP * max(lam[0], 0.0)
    lam = np.where(lam < clamp, 0.0, lam)
    s = lam[lam <= 1.0]
    if s.size == 0 or not np.any(s > 0):
        return 0, math.nan
    er = erank(s)
    if rounding == "floor":
        kept = math.floor(er)
    elif rounding == "round":
        kept = int(round(er))
    else:
        raise ValueError(f"rounding must be 'floor' or 'round', got {rounding!r}")
    n_star = int(s.size - kept)
    if n_star <= 0:
        return 0, math.nan
    return n_star, float(lam[lam.size - n_star])


def eigh_descending(psi) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of a symmetric matrix, eigenvalues in descending order."""
    w, v = np.linalg.eigh(symmetrize(np.asarray(psi, dtype=float)))
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


@dataclass(frozen=True)
class _Split:
    values: np.ndarray
    vectors: np.ndarray
    n_star: int
    lambda_star: float

    @property
    def head(self) -> int:
        return self.values.size - self.n_star

    def is_noop(self) -> bool:
        if self.n_star == 0:
            return True
        tail = self.values[self.head:]
        return float(tail.max() - tail.min()) <= FLAT_TAIL_TOL * max(float(self.values[0]), 1.0)


def _split(psi, rounding) -> _Split:
    w, v = eigh_descending(psi)
    n_star, lam_star = tail_size(w, rounding)
    return _Split(w, v, n_star, lam_star)


def _head_part(sp: _Split) -> np.ndarray:
    vh = sp.vectors[:, :sp.head]
    return (vh * sp.values[:sp.head]) @ vh.T


def deform_tail(psi, rounding: str = "floor") -> np.ndarray:
    """Flatten the tail eigenvalues and fix the diagonal inside the tail subspace.

    The tail eigenvalues are all set to ``lambda_star``; each asset's tail
    contribution is then rescaled by ``z_i z_j`` so that the diagonal stays
    at 1. Head eigenpairs are untouched. Returns a copy of ``psi`` when there
    is nothing to deform.
    """
    psi = np.asarray(psi, dtype=float)
    sp = _split(psi, rounding)
    if sp.is_noop():
        return psi.copy()
    vt = sp.vectors[:, sp.head:]
    lt = sp.values[sp.head:]
    num = (vt ** 2) @ lt
    y2 = sp.lambda_star * np.sum(vt ** 2, axis=1)
    # An asset with no weight in the tail subspace contributes nothing there.
    z = np.ones_like(y2)
    ok = y2 > 0
    z[ok] = np.sqrt(np.maximum(num[ok], 0.0) / y2[ok])
    tail = sp.lambda_star * (vt @ vt.T)
    out = _head_part(sp) + np.outer(z, z) * tail
    out = symmetrize(out)
    np.fill_diagonal(out, 1.0)
    return out


def _theta(sp: _Split) -> np.ndarray:
    vt = sp.vectors[:, sp.head:]
    return symmetrize(_head_part(sp) + sp.lambda_star * (vt @ vt.T))


def rescale_theta(psi, rounding: str = "floor") -> np.ndarray:
    """The flattened-tail matrix before unit-diagonal normalization."""
    psi = np.asarray(psi, dtype=float)
    sp = _split(psi, rounding)
    return psi.copy() if sp.is_noop() else _theta(sp)


def deform_rescale(psi, rounding: str = "floor") -> np.ndarray:
    """Flatten the tail eigenvalues, then renormalize to a unit diagonal."""
    psi = np.asarray(psi, dtype=float)
    sp = _split(psi, rounding)
    if sp.is_noop():
        return psi.copy()
    theta = _theta(sp)
    d = np.diag(theta)
    if np.any(d <= 0):
        raise ValueError("flattened matrix has a non-positive diagonal entry")
    s = 1.0 / np.sqrt(d)
    out = symmetrize(theta * np.outer(s, s))
    np.fill_diagonal(out, 1.0)
    return out


DEFORMATIONS = {
    "tail": deform_tail,
    "rescale": deform_rescale,
}


def regularize(psi, method: str, rounding: str = "floor") -> np.ndarray:
    if method == "none":
        return np.asarray(psi, dtype=float)
    try:
        fn = DEFORMATIONS[method]
    except KeyError:
        raise ValueError(f"unknown regularization {method!r}") from None
    return fn(psi, rounding)


SUMMARY_COLUMNS = ("Min", "1st Qu.", "Median", "Mean", "3rd Qu.", "Max")


@dataclass(frozen=True)
class SpectrumSummary:
    min: float
    q1: float
    median: float
    mean: float
    q3: float
    max: float
    n_star: int
    erank_value: float
    quantile_method: str = QUANTILE_METHOD

    def row(self) -> tuple[float, ...]:
        return (self.min, self.q1, self.median, self.mean, self.q3, self.max)

    def as_dict(self) -> dict:
        d = dict(zip(SUMMARY_COLUMNS, self.row()))
        d.update(n_star=self.n_star, erank=self.erank_value, quantile_method=self.quantile_method)
        return d


def summarize_values(values, rounding: str = "floor") -> SpectrumSummary:
    lam = _descending(values)
    q1, med, q3 = np.quantile(lam, [0.25, 0.5, 0.75], method=QUANTILE_METHOD)
    n_star, _ = tail_size(lam, rounding)
    clamp = EIG_CLAMP * max(lam[0], 0.0)
    return SpectrumSummary(
        min=float(lam[-1]), q1=float(q1), median=float(med), mean=float(lam.mean()),
        q3=float(q3), max=float(lam[0]), n_star=n_star,
        erank_value=erank(lam[lam > clamp]),
    )


def summarize(psi, rounding: str = "floor") -> SpectrumSummary:
    """Six-number eigenvalue summary plus tail size and effective rank."""
    return summarize_values(np.linalg.eigvalsh(symmetrize(np.asarray(psi, dtype=float))), rounding)
