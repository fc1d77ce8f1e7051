"""Loading return panels and building the normalized returns used for clustering."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from mlrisk.constants import MAD_SCALE


class LoadError(ValueError):
    """Base class for problems found while reading a returns file."""


class DuplicateTickerError(LoadError):
    pass


class NonNumericCellError(LoadError):
    pass


class NonFiniteValueError(LoadError):
    pass


class ZeroVarianceError(LoadError):
    pass


class TooFewObservationsError(LoadError):
    pass


class TooFewAssetsError(LoadError):
    pass


class RaggedRowError(LoadError):
    pass


@dataclass(frozen=True)
class ReturnPanel:
    """N x T matrix of period returns, column 0 being the most recent.

    ``volatilities`` holds the serial sample standard deviation of each row
    (denominator T - 1).
    """

    tickers: tuple[str, ...]
    returns: np.ndarray
    volatilities: np.ndarray = field(repr=False)

    @property
    def n_assets(self) -> int:
        return self.returns.shape[0]

    @property
    def n_obs(self) -> int:
        return self.returns.shape[1]


@dataclass(frozen=True)
class NormalizedReturns:
    """Winsorized normalized returns.

    Row ``i`` of ``values`` is row ``i`` of the raw returns divided by
    ``sigma_i * scale_factors[i]``; ``scale_floor`` is the cutoff ``v``.
    """

    values: np.ndarray
    scale_floor: float
    scale_factors: np.ndarray
    mad_scale: float = MAD_SCALE


def make_panel(returns, tickers=None) -> ReturnPanel:
    """Validate a raw return matrix and wrap it in a :class:`ReturnPanel`."""
    r = np.array(returns, dtype=float)
    if r.ndim != 2:
        raise LoadError(f"returns must be a 2-d matrix, got shape {r.shape}")
    n, t = r.shape
    if tickers is None:
        tickers = [f"A{i + 1}" for i in range(n)]
    tickers = tuple(str(x) for x in tickers)
    if len(tickers) != n:
        raise LoadError(f"{len(tickers)} tickers for {n} return rows")
    seen = set()
    for tk in tickers:
        if tk in seen:
            raise DuplicateTickerError(f"duplicate ticker {tk!r}")
        seen.add(tk)
    if n < 2:
        raise TooFewAssetsError(f"need at least 2 assets, got {n}")
    if t < 2:
        raise TooFewObservationsError(f"need at least 2 observations per asset, got {t}")
    if not np.all(np.isfinite(r)):
        i, s = np.argwhere(~np.isfinite(r))[0]
        raise NonFiniteValueError(f"non-finite return for {tickers[i]!r} at column {s + 1}")
    sd = r.std(axis=1, ddof=1)
    bad = np.flatnonzero(~(sd > 0))
    if bad.size:
        raise ZeroVarianceError(f"zero-variance return series for {tickers[bad[0]]!r}")
    r.setflags(write=False)
    sd.setflags(write=False)
    return ReturnPanel(tickers=tickers, returns=r, volatilities=sd)


def _parse_float(cell: str) -> float | None:
    try:
        return float(cell)
    except ValueError:
        return None


def load_returns(source: str | os.PathLike) -> ReturnPanel:
    """Read a comma-separated returns file.

    Each line is ``ticker,r_1,...,r_T`` with ``r_1`` the most recent return.
    A header line is recognized when none of its return fields parse as
    numbers; dates in it are not interpreted.
    """
    with open(source, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if not rows:
        raise TooFewAssetsError(f"{source}: empty file")
    if all(_parse_float(c) is None for c in rows[0][1:]):
        rows = rows[1:]
    tickers = []
    values = []
    width = None
    for lineno, row in enumerate(rows, start=1):
        tk, cells = row[0].strip(), row[1:]
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise RaggedRowError(f"{source}: row {tk!r} has {len(cells)} returns, expected {width}")
        parsed = []
        for j, c in enumerate(cells, start=1):
            x = _parse_float(c)
            if x is None:
                raise NonNumericCellError(f"{source}: non-numeric value {c!r} for {tk!r} at column {j}")
            parsed.append(x)
        tickers.append(tk)
        values.append(parsed)
    if width is not None and width < 2:
        raise TooFewObservationsError(f"{source}: need at least 2 return columns, got {width}")
    return make_panel(np.array(values, dtype=float).reshape(len(values), width or 0), tickers)


def mad(x: np.ndarray, scale: float = MAD_SCALE) -> float:
    """Median absolute deviation about the median, times ``scale``."""
    x = np.asarray(x, dtype=float)
    return float(scale * np.median(np.abs(x - np.median(x))))


def normalize_returns(panel: ReturnPanel, mad_scale: float = MAD_SCALE) -> NormalizedReturns:
    """Divide each return series by ``sigma_i * u_i``.

    ``u_i = sigma_i / v`` floored at 1, where ``v`` is ``exp(median - 3 MAD)``
    of the cross-section of log volatilities. Assets with volatility above the
    floor are therefore scaled by ``sigma_i**2 / v``; very quiet assets fall
    back to plain volatility normalization.
    """
    sigma = np.asarray(panel.volatilities, dtype=float)
    log_sigma = np.log(sigma)
    v = math.exp(float(np.median(log_sigma)) - 3.0 * mad(log_sigma, mad_scale))
    u = sigma / v
    u[u < 1.0] = 1.0
    values = panel.returns / (sigma * u)[:, None]
    return NormalizedReturns(values=values, scale_floor=v, scale_factors=u, mad_scale=mad_scale)
