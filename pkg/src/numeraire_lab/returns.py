"""Log returns under any numeraire and the analytic moment transforms.

The daily log return of asset X under numeraire U is
``ln(X_t/U_t) - ln(X_ref/U_ref)``; switching the numeraire to W subtracts W's
own return series, ``x_w = x_u - w_u``. Because that map is linear, means,
covariances and Pearson correlations under W follow from those under U by
closed-form algebra, with no need to touch the raw series:

    mean:  <x_w> = <x_u> - <w_u>
    cov:   C_xy_w = C_xy_u - C_xw_u - C_yw_u + C_ww_u
    var:   C_xx_w = C_xx_u - 2 C_xw_u + C_ww_u
    corr:  r_xy_w = C_xy_w / sqrt(C_xx_w C_yy_w)

The old numeraire U reappears as an ordinary asset (its own return under
itself is identically zero, so its covariance row under U is zero), and the
new numeraire W drops out. All transforms here preserve symmetry exactly by
construction.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from datetime import date

import numpy as np

from .errors import (
    AlignmentError,
    AssetLookupError,
    ConsistencyError,
    DataError,
    DegenerateAssetError,
    NumericalError,
    PreconditionError,
)
from .ingest import AlignedPanel, PricePanel, align_and_fill

__all__ = [
    "ReturnPanel",
    "MeanVector",
    "CovMatrix",
    "CorrMatrix",
    "log_returns",
    "rebase_returns",
    "mean_vector",
    "mean_transform",
    "sample_covariance",
    "covariance_transform",
    "variance_transform",
    "correlation_transform",
    "correlation_from_cov",
    "format_matrix",
]

#: Correlations may exceed [-1, 1] by at most this much before erroring.
CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class ReturnPanel:
    """Daily natural-log returns of ``assets`` under one ``numeraire``.

    NaN marks dates where an asset/numeraire quote pair was unavailable.
    """

    numeraire: str
    dates: tuple[date, ...]
    assets: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if self.numeraire in self.assets:
            raise PreconditionError("numeraire cannot appear among assets")
        if values.shape != (len(self.dates), len(self.assets)):
            raise PreconditionError("return matrix shape mismatch")

    @property
    def present(self) -> np.ndarray:
        return ~np.isnan(self.values)

    def series(self, asset: str) -> np.ndarray:
        return self.values[:, _index(self.assets, asset)]


@dataclass(frozen=True)
class MeanVector:
    numeraire: str
    assets: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != (len(self.assets),):
            raise PreconditionError("mean vector length mismatch")


@dataclass(frozen=True)
class CovMatrix:
    """Sample covariance of log returns, tagged with its numeraire."""

    numeraire: str
    assets: tuple[str, ...]
    values: np.ndarray
    sample_size: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        n = len(self.assets)
        if values.shape != (n, n):
            raise PreconditionError("covariance matrix shape mismatch")
        if not np.array_equal(values, values.T):
            raise PreconditionError("covariance matrix must be stored symmetrically")
        if np.any(np.diag(values) < 0):
            raise NumericalError("negative variance on the diagonal")

    def entry(self, x: str, y: str) -> float:
        return float(self.values[_index(self.assets, x), _index(self.assets, y)])


@dataclass(frozen=True)
class CorrMatrix:
    """Pearson correlation matrix of log returns under one numeraire."""

    numeraire: str
    assets: tuple[str, ...]
    values: np.ndarray
    sample_size: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        n = len(self.assets)
        if values.shape != (n, n):
            raise PreconditionError("correlation matrix shape mismatch")
        if not np.array_equal(values, values.T):
            raise PreconditionError("correlation matrix must be stored symmetrically")
        if not np.all(np.diag(values) == 1.0):
            raise PreconditionError("correlation diagonal must be exactly 1")
        finite = values[np.isfinite(values)]
        if finite.size and (finite.min() < -1.0 or finite.max() > 1.0):
            raise NumericalError("correlation entries outside [-1, 1]")

    def entry(self, x: str, y: str) -> float:
        return float(self.values[_index(self.assets, x), _index(self.assets, y)])


def _index(assets: tuple[str, ...], code: str) -> int:
    try:
        return assets.index(code)
    except ValueError:
        raise AssetLookupError(f"unknown asset code {code!r}") from None


def _replace_slot(assets: tuple[str, ...], old: str, new: str) -> tuple[str, ...]:
    """New asset list with ``old`` replaced in place by ``new``.

    In-place replacement keeps round-trip transforms order-stable.
    """
    j = _index(assets, old)
    out = list(assets)
    out[j] = new
    return tuple(out)


# ---------------------------------------------------------------------------
# series-level operations
# ---------------------------------------------------------------------------

def log_returns(panel, numeraire: str) -> ReturnPanel:
    """Daily log returns of every asset (and the base) under ``numeraire``.

    ``panel`` may be a :class:`PricePanel` (aligned on the fly) or an
    :class:`AlignedPanel`. Cross rates are taken triangularly through the
    panel base, so any panel asset or the base itself can serve as numeraire.
    A return exists at date t only when the asset and the numeraire are both
    quoted at t and at the asset's reference date.
    """
    if isinstance(panel, PricePanel):
        panel = align_and_fill(panel)
    if not isinstance(panel, AlignedPanel):
        raise PreconditionError("log_returns expects a PricePanel or AlignedPanel")
    p = panel.panel
    codes = tuple(p.assets) + (p.base_asset,)
    if numeraire not in codes:
        raise AssetLookupError(f"unknown numeraire {numeraire!r}")
    T = len(p.dates)
    if T < 2:
        raise AlignmentError("need at least 2 dates to compute returns")

    # Augment with the base asset as a dense column of ones.
    prices = np.column_stack([p.prices, np.ones(T)])
    present = ~np.isnan(prices)
    with np.errstate(invalid="ignore"):
        logp = np.log(prices)

    # ref[k, i]: index of the most recent present date strictly before
    # date index k+1 for column i, or -1.
    idx = np.where(present, np.arange(T)[:, None], -1)
    ref = np.maximum.accumulate(idx, axis=0)[:-1, :]

    u = codes.index(numeraire)
    ref_safe = np.where(ref >= 0, ref, 0)
    valid = (
        present[1:, :]
        & (ref >= 0)
        & present[1:, u][:, None]
        & np.take(present[:, u], ref_safe)
    )
    cols = np.arange(len(codes))
    rel_now = logp[1:, :] - logp[1:, u][:, None]
    rel_ref = logp[ref_safe, cols[None, :]] - logp[ref_safe, u]
    values = np.where(valid, rel_now - rel_ref, np.nan)

    out_cols = [i for i in range(len(codes)) if i != u]
    out_assets = tuple(codes[i] for i in out_cols)
    values = values[:, out_cols]
    for j, asset in enumerate(out_assets):
        if not np.any(~np.isnan(values[:, j])):
            raise AlignmentError(
                f"asset {asset} shares no usable dates with numeraire {numeraire}"
            )
    return ReturnPanel(
        numeraire=numeraire,
        dates=tuple(p.dates[1:]),
        assets=out_assets,
        values=values,
    )


def rebase_returns(returns_u: ReturnPanel, new_numeraire: str) -> ReturnPanel:
    """Re-express a return panel under a new numeraire, series by series.

    Each asset's series becomes ``x - w`` where ``w`` is the new numeraire's
    series under the old one; the old numeraire joins the asset list with
    series ``-w`` and the new numeraire drops out. Dates are unchanged.
    """
    if new_numeraire == returns_u.numeraire:
        return returns_u
    j = _index(returns_u.assets, new_numeraire)
    w = returns_u.values[:, j]
    values = returns_u.values - w[:, None]
    values[:, j] = -w  # series of the old numeraire: 0 - w
    return ReturnPanel(
        numeraire=new_numeraire,
        dates=returns_u.dates,
        assets=_replace_slot(returns_u.assets, new_numeraire, returns_u.numeraire),
        values=values,
    )


# ---------------------------------------------------------------------------
# sample moments
# ---------------------------------------------------------------------------

def mean_vector(returns: ReturnPanel) -> MeanVector:
    """Arithmetic mean of each asset's present returns."""
    present = returns.present
    counts = present.sum(axis=0)
    for asset, c in zip(returns.assets, counts):
        if c == 0:
            raise DataError(f"asset {asset} has no returns to average")
    with np.errstate(invalid="ignore"):
        means = np.nanmean(returns.values, axis=0)
    return MeanVector(numeraire=returns.numeraire, assets=returns.assets, values=means)


def sample_covariance(returns: ReturnPanel) -> CovMatrix:
    """Pairwise-complete sample covariance with the (n-1) divisor.

    Each pair is estimated over the dates where both series are present, with
    means taken over those common dates. ``sample_size`` records the minimum
    pairwise count. Gap-free panels reduce to the ordinary centered estimate.
    """
    X = returns.values
    present = returns.present
    n_assets = len(returns.assets)
    if np.all(present):
        n = X.shape[0]
        if n < 2:
            raise DataError("need at least 2 return rows for covariance")
        Xc = X - X.mean(axis=0)
        values = Xc.T @ Xc / (n - 1)
        values = (values + values.T) / 2.0  # exact storage symmetry
        return CovMatrix(
            numeraire=returns.numeraire,
            assets=returns.assets,
            values=values,
            sample_size=n,
        )

    values = np.empty((n_assets, n_assets))
    min_n = None
    for i in range(n_assets):
        for j in range(i, n_assets):
            common = present[:, i] & present[:, j]
            n = int(common.sum())
            if n < 2:
                raise DataError(
                    f"pair ({returns.assets[i]}, {returns.assets[j]}): "
                    f"fewer than 2 common return rows"
                )
            xi = X[common, i]
            xj = X[common, j]
            c = float((xi - xi.mean()) @ (xj - xj.mean()) / (n - 1))
            values[i, j] = values[j, i] = c
            min_n = n if min_n is None else min(min_n, n)
    return CovMatrix(
        numeraire=returns.numeraire,
        assets=returns.assets,
        values=values,
        sample_size=int(min_n),
    )


# ---------------------------------------------------------------------------
# analytic transforms between numeraires
# ---------------------------------------------------------------------------

def mean_transform(means_u: MeanVector, new_numeraire: str) -> MeanVector:
    """Shift every mean by minus the new numeraire's mean."""
    if new_numeraire == means_u.numeraire:
        return means_u
    j = _index(means_u.assets, new_numeraire)
    mw = means_u.values[j]
    values = means_u.values - mw
    values[j] = -mw
    return MeanVector(
        numeraire=new_numeraire,
        assets=_replace_slot(means_u.assets, new_numeraire, means_u.numeraire),
        values=values,
    )


def covariance_transform(cov_u: CovMatrix, new_numeraire: str) -> CovMatrix:
    """Map a covariance matrix from numeraire U to W by closed-form algebra.

    Uses ``C_xy_w = C_xy_u - C_xw_u - C_yw_u + C_ww_u``, seeding the old
    numeraire's row with zeros (its own return under itself is identically
    zero). Output symmetry is exact because the shift is a symmetric outer
    sum.
    """
    if new_numeraire == cov_u.numeraire:
        return cov_u
    if np.any(np.isnan(cov_u.values)):
        raise PreconditionError("covariance transform requires a complete matrix")
    j = _index(cov_u.assets, new_numeraire)
    cw = cov_u.values[:, j].copy()
    cww = cov_u.values[j, j]
    cw[j] = 0.0  # C(u, w) under u is zero by the seed-row convention
    A = cov_u.values.copy()
    A[j, :] = 0.0
    A[:, j] = 0.0
    values = (A + cww) - (cw[:, None] + cw[None, :])
    # Rounding can push a pegged asset's transformed variance a hair below 0.
    d = np.diag(values)
    scale = max(float(np.max(np.abs(cov_u.values))), 1e-300)
    if np.any(d < -1e-12 * scale):
        k = int(np.argmin(d))
        raise NumericalError(
            f"transformed variance of {cov_u.assets[k]} is negative "
            f"beyond tolerance: {d[k]}"
        )
    np.fill_diagonal(values, np.maximum(d, 0.0))
    return CovMatrix(
        numeraire=new_numeraire,
        assets=_replace_slot(cov_u.assets, new_numeraire, cov_u.numeraire),
        values=values,
        sample_size=cov_u.sample_size,
    )


def variance_transform(cov_u: CovMatrix, x: str, new_numeraire: str) -> float:
    """Variance of asset ``x`` under the new numeraire, from three entries.

    Matches the diagonal of :func:`covariance_transform` operation for
    operation.
    """
    if x == new_numeraire:
        raise PreconditionError(
            "variance of the numeraire in itself is identically 0"
        )
    cxx = cov_u.entry(x, x)
    cxw = cov_u.entry(x, new_numeraire)
    cww = cov_u.entry(new_numeraire, new_numeraire)
    value = (cxx + cww) - (cxw + cxw)
    scale = max(abs(cxx), abs(cww), abs(cxw), 1e-300)
    if value < -1e-12 * scale:
        raise NumericalError(
            f"transformed variance of {x} is negative beyond tolerance: {value}"
        )
    return float(value)


def _normalize_to_correlation(values: np.ndarray, assets, context: str) -> np.ndarray:
    d = np.diag(values).copy()
    bad = np.flatnonzero(d <= 0)
    if bad.size:
        raise DegenerateAssetError(
            f"{context}: zero or negative variance for asset {assets[bad[0]]} "
            "(pegged to the numeraire?)"
        )
    denom = np.sqrt(np.multiply.outer(d, d))
    r = values / denom
    np.fill_diagonal(r, 1.0)
    excess = np.abs(r) - 1.0
    if np.any(excess > CLAMP_TOL):
        i, j = np.unravel_index(np.argmax(excess), r.shape)
        raise ConsistencyError(
            f"{context}: correlation ({assets[i]}, {assets[j]}) = {r[i, j]} "
            f"exceeds [-1, 1] beyond tolerance {CLAMP_TOL}"
        )
    return np.clip(r, -1.0, 1.0)


def correlation_from_cov(cov: CovMatrix) -> CorrMatrix:
    """Pearson correlation matrix from a covariance matrix."""
    values = _normalize_to_correlation(cov.values, cov.assets, "correlation")
    return CorrMatrix(
        numeraire=cov.numeraire,
        assets=cov.assets,
        values=values,
        sample_size=cov.sample_size,
    )


def correlation_transform(cov_u: CovMatrix, new_numeraire: str) -> CorrMatrix:
    """Correlation matrix under the new numeraire, via the covariance map."""
    return correlation_from_cov(covariance_transform(cov_u, new_numeraire))


# ---------------------------------------------------------------------------
# text export
# ---------------------------------------------------------------------------

def format_matrix(matrix, extra_meta: str = "") -> str:
    """Delimited text export of a square asset matrix.

    Metadata comment line, then a header row and column of asset codes and
    the full symmetric matrix at 17 significant digits.
    """
    meta = f"# numeraire={matrix.numeraire} n={matrix.sample_size}"
    if extra_meta:
        meta += " " + extra_meta
    out = io.StringIO()
    out.write(meta + "\n")
    out.write("\t" + "\t".join(matrix.assets) + "\n")
    for asset, row in zip(matrix.assets, matrix.values):
        cells = "\t".join(format(v, ".17g") for v in row)
        out.write(f"{asset}\t{cells}\n")
    return out.getvalue()
