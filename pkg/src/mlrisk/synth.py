"""Synthetic return panels from a planted cluster factor model."""

from __future__ import annotations

import csv

import numpy as np


def synth_returns(n: int, t: int, k_true: int, seed: int = 0,
                  median_vol: float = 0.02, vol_dispersion: float = 0.5):
    """Simulate an ``n x t`` panel.

    Each asset loads on a market factor and on the factor of its planted
    cluster, plus idiosyncratic noise, with unit total variance before being
    scaled by a log-normally distributed volatility.

    Returns ``(tickers, returns, clusters)``.
    """
    if not (n > k_true >= 1):
        raise ValueError(f"need n > k_true >= 1, got n={n}, k_true={k_true}")
    if t < 2:
        raise ValueError(f"need t >= 2, got {t}")
    rng = np.random.default_rng(seed)
    clusters = np.concatenate([np.arange(k_true), rng.integers(0, k_true, size=n - k_true)])
    rng.shuffle(clusters)
    market = rng.standard_normal(t)
    factors = rng.standard_normal((k_true, t))
    b = rng.uniform(0.3, 0.7, size=n)
    c = rng.uniform(0.3, 0.6, size=n)
    e = np.sqrt(1.0 - b ** 2 - c ** 2)
    z = b[:, None] * market[None, :] + c[:, None] * factors[clusters] + e[:, None] * rng.standard_normal((n, t))
    vol = median_vol * np.exp(vol_dispersion * rng.standard_normal(n))
    width = len(str(n))
    tickers = [f"S{i + 1:0{width}d}" for i in range(n)]
    return tickers, vol[:, None] * z, clusters


def write_returns(path, tickers, returns) -> None:
    """Write a panel as ``ticker,r1,...,rT`` lines under a header line."""
    t = returns.shape[1]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ticker"] + [f"r{s + 1}" for s in range(t)])
        for tk, row in zip(tickers, returns):
            w.writerow([tk] + [repr(float(x)) for x in row])
