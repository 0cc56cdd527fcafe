"""Portfolio return and variance under a change of numeraire.

A portfolio's log return under numeraire U is the weighted sum of its assets'
log returns. When the weights sum to one, switching to numeraire W just
subtracts W's own return series, so the portfolio variance transforms as

    C_xx_w = C_xx_u - C_xw_u + C_ww_u,

where ``C_xw_u = 2 * sum_i alpha_i C(x_i, w)`` is the portfolio/numeraire
cross covariance (the factor 2 is part of the definition of that symbol).

Treating the portfolio log return as a weighted sum of asset log returns is
the standard linearization of the log of the weighted basket; this module
keeps that convention rather than correcting it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date
from typing import Mapping

import numpy as np

from .errors import (
    AlignmentError,
    AssetLookupError,
    NumericalError,
    PreconditionError,
    SchemaError,
)
from .returns import CovMatrix, ReturnPanel

__all__ = [
    "Portfolio",
    "ReturnSeries",
    "parse_portfolio",
    "portfolio_return_series",
    "portfolio_rebase",
    "portfolio_variance",
    "portfolio_cross_covariance",
    "portfolio_variance_transform",
]

NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True)
class Portfolio:
    """Asset shares, possibly short (negative), with an optional label.

    With ``normalized=True`` the weights must sum to 1 within 1e-12; the
    numeraire-change collapse ``x_w = x_u - w_u`` relies on that.
    """

    weights: Mapping[str, float]
    label: str = ""
    normalized: bool = False

    def __post_init__(self):
        if not self.weights:
            raise PreconditionError("portfolio weights must be non-empty")
        object.__setattr__(self, "weights", dict(self.weights))
        if self.normalized and abs(self.weight_sum - 1.0) > NORMALIZATION_TOL:
            raise PreconditionError(
                f"normalized portfolio weights sum to {self.weight_sum}, not 1"
            )

    @property
    def weight_sum(self) -> float:
        return float(sum(self.weights.values()))

    @property
    def is_unit_sum(self) -> bool:
        return abs(self.weight_sum - 1.0) <= NORMALIZATION_TOL


@dataclass(frozen=True)
class ReturnSeries:
    """A dated real series (portfolio or single-asset log returns)."""

    dates: tuple[date, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != (len(self.dates),):
            raise PreconditionError("series length does not match its dates")


def parse_portfolio(text: str, label: str = "", normalized: bool = False) -> Portfolio:
    """Parse ``ASSET<TAB>weight`` lines; '#' starts a comment."""
    weights: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) != 2:
            raise SchemaError(f"portfolio line {lineno}: expected 'ASSET<TAB>weight'")
        asset, w = parts[0].strip(), parts[1].strip()
        if asset in weights:
            raise SchemaError(f"portfolio line {lineno}: duplicate asset {asset}")
        try:
            weights[asset] = float(w)
        except ValueError:
            raise SchemaError(
                f"portfolio line {lineno}: non-numeric weight {w!r}"
            ) from None
    if not weights:
        raise SchemaError("portfolio file contains no weights")
    return Portfolio(weights=weights, label=label, normalized=normalized)


def portfolio_return_series(returns: ReturnPanel, p: Portfolio) -> ReturnSeries:
    """Weighted sum of asset return series over their common present dates."""
    idx = []
    for asset in p.weights:
        if asset not in returns.assets:
            raise AssetLookupError(f"portfolio asset {asset!r} not in return panel")
        idx.append(returns.assets.index(asset))
    alpha = np.array([p.weights[a] for a in p.weights], dtype=float)
    sub = returns.values[:, idx]
    rows = np.all(~np.isnan(sub), axis=1)
    if not np.any(rows):
        raise AlignmentError("portfolio assets share no common return dates")
    dates = tuple(d for d, keep in zip(returns.dates, rows) if keep)
    return ReturnSeries(dates=dates, values=sub[rows] @ alpha)


def portfolio_rebase(
    series_u: ReturnSeries,
    w_series_u: ReturnSeries,
    p: Portfolio | None = None,
) -> ReturnSeries:
    """Portfolio series under the new numeraire: elementwise ``x - w``.

    Valid only for unit-sum portfolios; pass ``p`` to have that checked.
    """
    if p is not None and not p.is_unit_sum:
        raise PreconditionError(
            "portfolio weights must sum to 1 for the rebasing collapse "
            "x_w = x_u - w_u to hold"
        )
    if series_u.dates != w_series_u.dates:
        raise AlignmentError("portfolio and numeraire series dates differ")
    return ReturnSeries(
        dates=series_u.dates, values=series_u.values - w_series_u.values
    )


def _alpha_and_index(cov: CovMatrix, p: Portfolio):
    idx = []
    for asset in p.weights:
        if asset not in cov.assets:
            raise AssetLookupError(f"portfolio asset {asset!r} not in covariance matrix")
        idx.append(cov.assets.index(asset))
    alpha = np.array([p.weights[a] for a in p.weights], dtype=float)
    return alpha, idx


def portfolio_variance(cov_u: CovMatrix, p: Portfolio) -> float:
    """Quadratic form alpha' C alpha."""
    alpha, idx = _alpha_and_index(cov_u, p)
    sub = cov_u.values[np.ix_(idx, idx)]
    value = float(alpha @ sub @ alpha)
    scale = max(float(np.max(np.abs(sub))), 1e-300) * float(alpha @ alpha)
    if value < -1e-12 * scale:
        raise NumericalError(f"portfolio variance is negative beyond tolerance: {value}")
    return value


def portfolio_cross_covariance(cov_u: CovMatrix, p: Portfolio, w: str) -> float:
    """Covariance symbol between portfolio and numeraire W: 2 sum_i a_i C(x_i, w)."""
    alpha, idx = _alpha_and_index(cov_u, p)
    if w not in cov_u.assets:
        raise AssetLookupError(f"unknown asset code {w!r}")
    j = cov_u.assets.index(w)
    return float(2.0 * (alpha @ cov_u.values[idx, j]))


def portfolio_variance_transform(cov_u: CovMatrix, p: Portfolio, w: str) -> float:
    """Portfolio variance under numeraire W from moments under U.

    ``C_xx_u - C_xw_u + C_ww_u`` with the factor-2 cross-covariance symbol;
    requires unit-sum weights.
    """
    if not p.is_unit_sum:
        raise PreconditionError(
            "portfolio weights must sum to 1 for the variance transform"
        )
    var_u = portfolio_variance(cov_u, p)
    cross = portfolio_cross_covariance(cov_u, p, w)
    cww = cov_u.entry(w, w)
    return (var_u + cww) - cross
