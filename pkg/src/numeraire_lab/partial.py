"""Partial correlations via the precision matrix, and their numeraire audit.

The partial correlation of assets X and Y given every other asset in the
market is read off the inverse of the correlation matrix:

    rho_xy = -P_xy / sqrt(P_xx P_yy),   P = C^-1.

Unlike ordinary correlations, these are invariant under a change of numeraire
(the numeraire swap only adds a series that already lies in the conditioning
span), so a full asset-by-asset matrix can be assembled from a couple of
numeraire runs; an audit records how far apart the admissible numeraires
actually land numerically.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import (
    ConsistencyError,
    CoverageError,
    FactorizationError,
    IllConditionedError,
    PreconditionError,
)
from .ingest import AlignedPanel, PricePanel, align_and_fill
from .returns import (
    CorrMatrix,
    CovMatrix,
    correlation_from_cov,
    log_returns,
    sample_covariance,
)

__all__ = [
    "PrecisionMatrix",
    "PartialCorrMatrix",
    "AssembledPartial",
    "InvarianceReport",
    "precision_matrix",
    "partial_correlations",
    "assemble_full_partial_matrix",
    "invariance_report",
    "format_partial_matrix",
]

#: Inversion refuses above this condition number unless a ridge is supplied.
CONDITION_LIMIT = 1e12

#: Default diagonal ridge when one is requested without an explicit value.
DEFAULT_RIDGE = 1e-8


@dataclass(frozen=True)
class PrecisionMatrix:
    """Inverse correlation matrix with provenance and conditioning metadata."""

    assets: tuple[str, ...]
    values: np.ndarray
    source_numeraire: str
    condition_estimate: float
    ridge: float | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if not np.array_equal(values, values.T):
            raise PreconditionError("precision matrix must be stored symmetrically")
        if np.any(np.diag(values) <= 0):
            raise FactorizationError("precision diagonal must be positive")


@dataclass(frozen=True)
class PartialCorrMatrix:
    """Symmetric unit-diagonal partial-correlation matrix.

    ``coverage[i, j]`` is False where no computation covered the pair (the
    value there is NaN). ``sample_size`` is the minimum pairwise count of the
    underlying correlation runs, for downstream significance tests.
    """

    assets: tuple[str, ...]
    values: np.ndarray
    coverage: np.ndarray = field(repr=False)
    sample_size: int = 0
    source_numeraire: str = ""
    condition_estimate: float = float("nan")
    ridge: float | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        coverage = np.asarray(self.coverage, dtype=bool)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "coverage", coverage)
        n = len(self.assets)
        if values.shape != (n, n) or coverage.shape != (n, n):
            raise PreconditionError("partial-correlation matrix shape mismatch")
        if not np.array_equal(values, values.T, equal_nan=True):
            raise PreconditionError("partial-correlation matrix must be symmetric")
        if not np.all(np.diag(values) == 1.0):
            raise PreconditionError("partial-correlation diagonal must be exactly 1")
        covered = values[coverage]
        if covered.size and (covered.min() < -1.0 or covered.max() > 1.0):
            raise PreconditionError("partial correlations outside [-1, 1]")

    def entry(self, x: str, y: str) -> float:
        i, j = self.assets.index(x), self.assets.index(y)
        return float(self.values[i, j])


def _as_square(matrix) -> tuple[tuple[str, ...], np.ndarray, str, int]:
    if not isinstance(matrix, (CorrMatrix, CovMatrix)):
        raise PreconditionError("expected a CorrMatrix or CovMatrix")
    return matrix.assets, matrix.values, matrix.numeraire, matrix.sample_size


def precision_matrix(matrix, ridge: float | None = None) -> PrecisionMatrix:
    """Exact SPD inverse of a correlation (or covariance) matrix.

    ``ridge`` adds a constant to the diagonal before inversion and lifts the
    condition-number guard onto the ridged matrix. Without a ridge, a
    condition estimate above 1e12 is refused, naming the most pegged pair.
    """
    assets, values, numeraire, _ = _as_square(matrix)
    if isinstance(matrix, CorrMatrix) and not np.all(np.diag(values) == 1.0):
        raise PreconditionError("correlation input must have unit diagonal")
    work = values if ridge is None else values + ridge * np.eye(len(assets))
    cond = float(np.linalg.cond(work))
    if cond > CONDITION_LIMIT:
        off = np.abs(work - np.diag(np.diag(work)))
        i, j = np.unravel_index(np.argmax(off), off.shape)
        raise IllConditionedError(
            f"condition estimate {cond:.3g} exceeds {CONDITION_LIMIT:.0e}; "
            f"worst-pegged pair ({assets[i]}, {assets[j]}); "
            "enable a ridge to proceed"
        )
    try:
        c, low = cho_factor(work)
    except LinAlgError:
        raise FactorizationError(
            "matrix is not positive definite; cannot form the precision matrix"
        ) from None
    inv = cho_solve((c, low), np.eye(len(assets)))
    inv = (inv + inv.T) / 2.0
    return PrecisionMatrix(
        assets=assets,
        values=inv,
        source_numeraire=numeraire,
        condition_estimate=cond,
        ridge=ridge,
    )


def partial_correlations(matrix, ridge: float | None = None) -> PartialCorrMatrix:
    """Partial correlation of each pair given all other assets.

    Works identically from a correlation or a covariance matrix; the
    normalization cancels any per-asset scaling.
    """
    assets, _, _, sample_size = _as_square(matrix)
    prec = precision_matrix(matrix, ridge=ridge)
    d = np.diag(prec.values)
    values = -prec.values / np.sqrt(np.multiply.outer(d, d))
    np.fill_diagonal(values, 1.0)
    excess = np.abs(values) - 1.0
    if np.any(excess > 1e-12):
        i, j = np.unravel_index(np.argmax(excess), values.shape)
        raise ConsistencyError(
            f"partial correlation ({assets[i]}, {assets[j]}) = {values[i, j]} "
            "outside [-1, 1] beyond tolerance"
        )
    values = np.clip(values, -1.0, 1.0)
    return PartialCorrMatrix(
        assets=assets,
        values=values,
        coverage=np.ones((len(assets), len(assets)), dtype=bool),
        sample_size=sample_size,
        source_numeraire=prec.source_numeraire,
        condition_estimate=prec.condition_estimate,
        ridge=ridge,
    )


@dataclass(frozen=True)
class AssembledPartial:
    """Full-universe partial matrix plus the cross-numeraire audit.

    ``audit[i, j]`` is the max absolute discrepancy of the entry across all
    admissible numeraires (NaN where fewer than two were admissible).
    """

    matrix: PartialCorrMatrix
    audit: np.ndarray = field(repr=False)
    numeraires: tuple[str, ...] = ()

    @property
    def max_discrepancy(self) -> float:
        finite = self.audit[np.isfinite(self.audit)]
        return float(finite.max()) if finite.size else 0.0


def _partial_under(panel: AlignedPanel, numeraire: str, ridge):
    returns = log_returns(panel, numeraire)
    cov = sample_covariance(returns)
    return partial_correlations(correlation_from_cov(cov), ridge=ridge)


def _max_workers(n_tasks: int) -> int:
    cap = os.environ.get("NUMERAIRE_LAB_THREADS", "1")
    try:
        cap_n = max(1, int(cap))
    except ValueError:
        cap_n = 1
    return max(1, min(cap_n, n_tasks))


def assemble_full_partial_matrix(
    panel: PricePanel | AlignedPanel,
    numeraires: list[str],
    ridge: float | None = None,
) -> AssembledPartial:
    """Cover every asset pair using a caller-ordered list of numeraires.

    Each pair's entry comes from the first listed numeraire excluding both
    assets; invariance makes the choice immaterial up to numerics, and the
    audit records the observed spread. Pairs no listed numeraire can cover
    are left NaN with ``coverage`` False (legal only while at least one pair
    is covered; a fully uncoverable request raises).
    """
    if not numeraires:
        raise PreconditionError("at least one numeraire is required")
    if len(set(numeraires)) != len(numeraires):
        raise PreconditionError("numeraire list contains duplicates")
    if isinstance(panel, PricePanel):
        panel = align_and_fill(panel)
    universe = tuple(panel.panel.assets) + (panel.panel.base_asset,)
    for u in numeraires:
        if u not in universe:
            raise PreconditionError(f"numeraire {u!r} not in the asset universe")

    runs: dict[str, PartialCorrMatrix] = {}
    workers = _max_workers(len(numeraires))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {
                u: pool.submit(_partial_under, panel, u, ridge) for u in numeraires
            }
        runs = {u: f.result() for u, f in futures.items()}
    else:
        runs = {u: _partial_under(panel, u, ridge) for u in numeraires}

    n = len(universe)
    values = np.full((n, n), np.nan)
    audit = np.full((n, n), np.nan)
    coverage = np.zeros((n, n), dtype=bool)
    np.fill_diagonal(values, 1.0)
    np.fill_diagonal(coverage, True)
    np.fill_diagonal(audit, 0.0)
    any_uncovered_pair = False
    for i in range(n):
        for j in range(i + 1, n):
            x, y = universe[i], universe[j]
            admissible = [u for u in numeraires if u not in (x, y)]
            if not admissible:
                any_uncovered_pair = True
                continue
            estimates = [runs[u].entry(x, y) for u in admissible]
            values[i, j] = values[j, i] = estimates[0]
            coverage[i, j] = coverage[j, i] = True
            if len(estimates) > 1:
                spread = max(estimates) - min(estimates)
                audit[i, j] = audit[j, i] = spread
    if any_uncovered_pair and not coverage[~np.eye(n, dtype=bool)].any():
        raise CoverageError("no asset pair is covered by the supplied numeraires")
    matrix = PartialCorrMatrix(
        assets=universe,
        values=values,
        coverage=coverage,
        sample_size=min(runs[u].sample_size for u in numeraires),
        source_numeraire=numeraires[0],
        condition_estimate=max(runs[u].condition_estimate for u in numeraires),
        ridge=ridge,
    )
    return AssembledPartial(matrix=matrix, audit=audit, numeraires=tuple(numeraires))


@dataclass(frozen=True)
class InvarianceReport:
    """Per-pair |rho_u - rho_w| for pairs disjoint from both numeraires."""

    numeraire_u: str
    numeraire_w: str
    pairs: tuple[tuple[str, str, float], ...]
    max_discrepancy: float
    mean_discrepancy: float


def invariance_report(
    panel: PricePanel | AlignedPanel,
    u: str,
    w: str,
    ridge: float | None = None,
) -> InvarianceReport:
    """Measure how numeraire-invariant the sample partial correlations are."""
    if u == w:
        raise PreconditionError("the two numeraires must differ")
    if isinstance(panel, PricePanel):
        panel = align_and_fill(panel)
    rho_u = _partial_under(panel, u, ridge)
    rho_w = _partial_under(panel, w, ridge)
    common = [a for a in rho_u.assets if a in rho_w.assets and a not in (u, w)]
    pairs = []
    for i, x in enumerate(common):
        for y in common[i + 1 :]:
            pairs.append((x, y, abs(rho_u.entry(x, y) - rho_w.entry(x, y))))
    diffs = np.array([d for _, _, d in pairs]) if pairs else np.zeros(1)
    return InvarianceReport(
        numeraire_u=u,
        numeraire_w=w,
        pairs=tuple(pairs),
        max_discrepancy=float(diffs.max()),
        mean_discrepancy=float(diffs.mean()),
    )


def format_partial_matrix(matrix: PartialCorrMatrix) -> str:
    """Text export; same layout as the moment matrices plus ridge/cond meta."""
    from .returns import format_matrix

    ridge = "none" if matrix.ridge is None else format(matrix.ridge, ".17g")
    proxy = _MatrixProxy(
        numeraire=matrix.source_numeraire,
        sample_size=matrix.sample_size,
        assets=matrix.assets,
        values=matrix.values,
    )
    return format_matrix(
        proxy, extra_meta=f"ridge={ridge} cond={matrix.condition_estimate:.17g}"
    )


@dataclass(frozen=True)
class _MatrixProxy:
    numeraire: str
    sample_size: int
    assets: tuple[str, ...]
    values: np.ndarray
