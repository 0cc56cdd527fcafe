"""Empirical pipeline: transform validation, threshold clusters,
most-similar-asset robustness, and significance-filtered network export.

Everything here is a pure function over a price panel or a matrix already in
hand. Filtering uses a Bonferroni-corrected two-sided Fisher-z test on the
partial correlations; clusters are connected components of the thresholded
correlation graph.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    PreconditionError,
    StatisticalPowerError,
)
from .ingest import AlignedPanel, PricePanel, align_and_fill
from .partial import PartialCorrMatrix
from .returns import (
    CorrMatrix,
    correlation_from_cov,
    correlation_transform,
    log_returns,
    sample_covariance,
)

__all__ = [
    "SimilarityRow",
    "SimilarityTable",
    "Edge",
    "NetworkEdgeList",
    "ThresholdReport",
    "MaskingReport",
    "transform_validation_r2",
    "threshold_components",
    "most_similar",
    "significant_edges",
    "export_network",
    "masking_report",
]


def _aligned(panel) -> AlignedPanel:
    return align_and_fill(panel) if isinstance(panel, PricePanel) else panel


def _direct_correlation(panel: AlignedPanel, numeraire: str) -> CorrMatrix:
    return correlation_from_cov(sample_covariance(log_returns(panel, numeraire)))


# ---------------------------------------------------------------------------
# transform validation
# ---------------------------------------------------------------------------

def transform_validation_r2(panel, u: str, w: str) -> float:
    """Coefficient of determination of transformed vs direct correlations.

    Computes the correlation matrix under ``w`` empirically and via the
    closed-form transform from ``u``, then returns R-squared over the
    off-diagonal entries of the common asset set. Identical numeraires give
    exactly 1.
    """
    if u == w:
        return 1.0
    panel = _aligned(panel)
    direct = _direct_correlation(panel, w)
    transformed = correlation_transform(sample_covariance(log_returns(panel, u)), w)
    common = [a for a in direct.assets if a in transformed.assets]
    di = [direct.assets.index(a) for a in common]
    ti = [transformed.assets.index(a) for a in common]
    emp = direct.values[np.ix_(di, di)]
    pred = transformed.values[np.ix_(ti, ti)]
    off = ~np.eye(len(common), dtype=bool)
    emp, pred = emp[off], pred[off]
    ss_res = float(np.sum((emp - pred) ** 2))
    ss_tot = float(np.sum((emp - emp.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return 1.0 - ss_res / ss_tot


# ---------------------------------------------------------------------------
# threshold clusters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThresholdReport:
    """Edges with r > threshold and the connected components of size >= 2."""

    threshold: float
    edges: tuple[tuple[str, str, float], ...]
    components: tuple[tuple[str, ...], ...]


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb


def threshold_components(
    corr: CorrMatrix, thresholds: list[float]
) -> list[ThresholdReport]:
    """Filter the correlation graph at each threshold and report clusters.

    An edge survives iff r > threshold (strict). Components are ordered by
    their lexicographically smallest member; members are sorted.
    """
    reports = []
    for tau in thresholds:
        if not (0.0 < tau <= 1.0):
            raise PreconditionError(f"threshold {tau} outside (0, 1]")
        uf = _UnionFind(corr.assets)
        edges = []
        n = len(corr.assets)
        for i in range(n):
            for j in range(i + 1, n):
                r = corr.values[i, j]
                if r > tau:
                    a, b = sorted((corr.assets[i], corr.assets[j]))
                    edges.append((a, b, float(r)))
                    uf.union(a, b)
        groups: dict[str, list[str]] = {}
        for a in corr.assets:
            groups.setdefault(uf.find(a), []).append(a)
        components = sorted(
            (tuple(sorted(g)) for g in groups.values() if len(g) >= 2),
            key=lambda c: c[0],
        )
        reports.append(
            ThresholdReport(
                threshold=tau,
                edges=tuple(sorted(edges)),
                components=tuple(components),
            )
        )
    return reports


# ---------------------------------------------------------------------------
# most-similar-asset robustness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimilarityRow:
    """Modal most-similar asset for one asset, over all numeraires.

    ``most_similar`` holds every asset tied at the modal count (usually one).
    ``tallies`` keeps the full winner counts for auditing.
    """

    asset: str
    most_similar: tuple[str, ...]
    occurrences: int
    tallies: dict[str, int] = field(repr=False, default_factory=dict)


@dataclass(frozen=True)
class SimilarityTable:
    rows: tuple[SimilarityRow, ...]

    def row(self, asset: str) -> SimilarityRow:
        for r in self.rows:
            if r.asset == asset:
                return r
        raise KeyError(asset)


def most_similar(panel) -> SimilarityTable:
    """For each asset, the peer most often closest in correlation.

    Under every numeraire U != X the winner is argmax over Z not in {X, U} of
    r(X, Z); winners are tallied across numeraires. Exact floating-point ties
    within one matrix credit every tied asset; ties at the modal count are
    reported as a set.
    """
    panel = _aligned(panel)
    universe = tuple(panel.panel.assets) + (panel.panel.base_asset,)
    if len(universe) < 3:
        raise PreconditionError("need at least 3 assets for similarity analysis")
    tallies: dict[str, dict[str, int]] = {x: {} for x in universe}
    for u in universe:
        corr = _direct_correlation(panel, u)
        assets = corr.assets
        vals = corr.values
        for i, x in enumerate(assets):
            row = vals[i].copy()
            row[i] = -np.inf
            best = row.max()
            winners = [assets[j] for j in np.flatnonzero(row == best)]
            for wname in winners:
                tallies[x][wname] = tallies[x].get(wname, 0) + 1
    rows = []
    for x in universe:
        t = tallies[x]
        top = max(t.values())
        tied = tuple(sorted(a for a, c in t.items() if c == top))
        rows.append(SimilarityRow(asset=x, most_similar=tied, occurrences=top, tallies=t))
    return SimilarityTable(rows=tuple(rows))


# ---------------------------------------------------------------------------
# significance filtering and export
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Edge:
    asset_a: str
    asset_b: str
    weight: float
    p_value: float
    degenerate: bool = False


@dataclass(frozen=True)
class NetworkEdgeList:
    edges: tuple[Edge, ...]
    alpha: float
    m_tests: int
    method: str = "fisher-z"

    @property
    def effective_level(self) -> float:
        return self.alpha / self.m_tests


def significant_edges(
    pcorr: PartialCorrMatrix,
    n: int,
    alpha: float = 0.05,
    m: int | None = None,
) -> NetworkEdgeList:
    """Bonferroni-filtered partial-correlation edges.

    Two-sided Fisher-z p-value with effective degrees of freedom
    ``n - k - 3`` where k is the number of conditioned variables; an edge is
    retained iff p < alpha / m. ``m`` defaults to the full squared matrix
    count (including diagonal and both orientations).
    """
    k = len(pcorr.assets) - 2
    if n <= k + 3:
        raise StatisticalPowerError(
            f"sample size {n} too small for {k} conditioning variables "
            f"(need n > {k + 3})"
        )
    if m is None:
        m = len(pcorr.assets) ** 2
    if m < 1:
        raise PreconditionError("m must be >= 1")
    level = alpha / m
    dof_factor = math.sqrt(n - k - 3)
    edges = []
    count = len(pcorr.assets)
    for i in range(count):
        for j in range(i + 1, count):
            if not pcorr.coverage[i, j]:
                continue
            rho = float(pcorr.values[i, j])
            degenerate = abs(rho) == 1.0
            if degenerate:
                p = 0.0
            else:
                z = math.atanh(rho) * dof_factor
                p = math.erfc(abs(z) / math.sqrt(2.0))
            if p < level:
                a, b = sorted((pcorr.assets[i], pcorr.assets[j]))
                edges.append(
                    Edge(asset_a=a, asset_b=b, weight=rho, p_value=p, degenerate=degenerate)
                )
    edges.sort(key=lambda e: (e.asset_a, e.asset_b))
    return NetworkEdgeList(edges=tuple(edges), alpha=alpha, m_tests=m)


def export_network(network: NetworkEdgeList, fmt: str) -> str:
    """Deterministic text export: ``dot``, ``json`` or ``edgelist``.

    DOT output draws negative-weight edges dashed so they stand out.
    """
    edges = sorted(network.edges, key=lambda e: (e.asset_a, e.asset_b))
    if fmt == "dot":
        lines = ["graph partial_correlation_network {"]
        for e in edges:
            style = ', style=dashed, color=red' if e.weight < 0 else ""
            lines.append(
                f'  "{e.asset_a}" -- "{e.asset_b}" '
                f'[weight={e.weight:.6g}, label="{e.weight:.3f}"{style}];'
            )
        lines.append("}")
        return "\n".join(lines) + "\n"
    if fmt == "json":
        doc = {
            "alpha": network.alpha,
            "m_tests": network.m_tests,
            "method": network.method,
            "edges": [
                {
                    "a": e.asset_a,
                    "b": e.asset_b,
                    "weight": e.weight,
                    "p_value": e.p_value,
                    "degenerate": e.degenerate,
                }
                for e in edges
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if fmt == "edgelist":
        return "".join(
            f"{e.asset_a}\t{e.asset_b}\t{e.weight:.17g}\t{e.p_value:.17g}\n"
            for e in edges
        )
    raise PreconditionError(f"unknown export format {fmt!r}")


# ---------------------------------------------------------------------------
# masking diagnostic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MaskingReport:
    """Descriptive diagnostic of numeraire-induced correlation masking.

    ``score`` is median |r(y, .)| under the neutral numeraire divided by the
    same median under numeraire x; a pegged (x, y) pair pushes it above 1.
    """

    x: str
    y: str
    neutral: str
    xy_correlations: dict[str, float]
    abs_corr_under_x: dict[str, float]
    abs_corr_under_neutral: dict[str, float]
    score: float


def masking_report(
    panel,
    x: str,
    y: str,
    numeraires: list[str] | None = None,
    neutral: str | None = None,
) -> MaskingReport:
    """Compare y's correlation profile under numeraire x vs a neutral one."""
    if x == y:
        raise PreconditionError("x and y must differ")
    panel = _aligned(panel)
    universe = tuple(panel.panel.assets) + (panel.panel.base_asset,)
    if numeraires is None:
        numeraires = [a for a in universe if a not in (x, y)]
    if neutral is None:
        candidates = [a for a in numeraires if a not in (x, y)]
        if not candidates:
            raise PreconditionError("no neutral numeraire available")
        neutral = candidates[0]

    xy = {}
    for u in numeraires:
        if u in (x, y):
            continue
        corr = _direct_correlation(panel, u)
        xy[u] = corr.entry(x, y)

    corr_x = _direct_correlation(panel, x)
    corr_neutral = _direct_correlation(panel, neutral)
    zs = [a for a in universe if a not in (x, y, neutral)]
    under_x = {z: abs(corr_x.entry(y, z)) for z in zs}
    under_neutral = {z: abs(corr_neutral.entry(y, z)) for z in zs}
    med_x = float(np.median(list(under_x.values())))
    med_neutral = float(np.median(list(under_neutral.values())))
    score = math.inf if med_x == 0.0 else med_neutral / med_x
    return MaskingReport(
        x=x,
        y=y,
        neutral=neutral,
        xy_correlations=xy,
        abs_corr_under_x=under_x,
        abs_corr_under_neutral=under_neutral,
        score=score,
    )
