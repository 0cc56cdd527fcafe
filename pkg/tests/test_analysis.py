import json
import math

import numpy as np
import pytest

from numeraire_lab import (
    CorrMatrix,
    Edge,
    NetworkEdgeList,
    PartialCorrMatrix,
    PreconditionError,
    PricePanel,
    StatisticalPowerError,
    export_network,
    masking_report,
    most_similar,
    partial_correlations,
    significant_edges,
    threshold_components,
    transform_validation_r2,
)
from conftest import business_dates, make_panel
from test_partial import corr, random_spd_corr


class TestTransformValidation:
    def test_gap_free_panel_r2_is_one(self, small_panel):
        r2 = transform_validation_r2(small_panel, "USD", "A00")
        assert r2 >= 1 - 1e-9

    def test_same_numeraire_exact_one(self, small_panel):
        assert transform_validation_r2(small_panel, "A01", "A01") == 1.0

    def test_all_ordered_pairs_on_one_panel(self):
        panel = make_panel(n_assets=4, n_days=80, seed=40)
        codes = panel.assets + ("USD",)
        for u in codes:
            for w in codes:
                assert transform_validation_r2(panel, u, w) >= 1 - 1e-9


class TestThresholdComponents:
    def test_single_pair_above_threshold(self):
        values = np.array([
            [1.0, 0.95, 0.1],
            [0.95, 1.0, 0.2],
            [0.1, 0.2, 1.0],
        ])
        reports = threshold_components(corr(values, ["A", "B", "C"]), [0.9])
        rep = reports[0]
        assert rep.components == (("A", "B"),)
        assert rep.edges == (("A", "B", 0.95),)

    def test_threshold_one_gives_no_edges(self):
        c = random_spd_corr(5, seed=41)
        rep = threshold_components(c, [1.0])[0]
        assert rep.edges == ()
        assert rep.components == ()

    def test_monotone_in_threshold(self):
        for seed in range(10):
            c = random_spd_corr(6, seed=100 + seed)
            hi, lo = threshold_components(c, [0.6, 0.3])
            hi_edges = {(a, b) for a, b, _ in hi.edges}
            lo_edges = {(a, b) for a, b, _ in lo.edges}
            assert hi_edges <= lo_edges

    def test_bad_threshold_rejected(self):
        c = random_spd_corr(3, seed=42)
        with pytest.raises(PreconditionError):
            threshold_components(c, [0.0])
        with pytest.raises(PreconditionError):
            threshold_components(c, [1.5])

    def test_component_ordering_deterministic(self):
        values = np.eye(4)
        values[0, 1] = values[1, 0] = 0.95
        values[2, 3] = values[3, 2] = 0.95
        rep = threshold_components(corr(values, ["ZZZ", "MMM", "AAA", "BBB"]), [0.9])[0]
        assert rep.components == (("AAA", "BBB"), ("MMM", "ZZZ"))


def _pegged_panel(n_days=150, seed=50):
    """Base + 3 assets where A00 and A01 track each other closely."""
    rng = np.random.default_rng(seed)
    common = rng.normal(0, 0.01, n_days)
    a0 = np.exp(np.cumsum(common))
    a1 = 0.5 * a0 * np.exp(np.cumsum(rng.normal(0, 1e-4, n_days)))
    a2 = np.exp(np.cumsum(rng.normal(0, 0.01, n_days)))
    a3 = np.exp(np.cumsum(rng.normal(0, 0.01, n_days)))
    return PricePanel(
        base_asset="USD",
        dates=business_dates(n_days),
        assets=("A00", "A01", "A02", "A03"),
        prices=np.column_stack([a0, a1, a2, a3]),
    )


class TestMostSimilar:
    def test_pegged_pair_wins_under_every_numeraire(self):
        panel = _pegged_panel()
        table = most_similar(panel)
        n = len(panel.assets) + 1
        row = table.row("A00")
        assert row.most_similar == ("A01",)
        assert row.occurrences == n - 2
        assert table.row("A01").most_similar == ("A00",)

    def test_three_asset_boundary(self):
        panel = make_panel(n_assets=2, n_days=40, seed=51)
        table = most_similar(panel)
        for row in table.rows:
            assert row.occurrences <= 1

    def test_counts_invariant_under_relabeling(self):
        panel = make_panel(n_assets=4, n_days=60, seed=52)
        perm = [2, 0, 3, 1]
        renamed = PricePanel(
            base_asset=panel.base_asset,
            dates=panel.dates,
            assets=tuple(panel.assets[i] for i in perm),
            prices=panel.prices[:, perm],
        )
        t1 = {r.asset: (r.most_similar, r.occurrences) for r in most_similar(panel).rows}
        t2 = {r.asset: (r.most_similar, r.occurrences) for r in most_similar(renamed).rows}
        assert t1 == t2

    def test_occurrences_bounded(self):
        panel = make_panel(n_assets=5, n_days=80, seed=53)
        table = most_similar(panel)
        n = len(panel.assets) + 1
        for row in table.rows:
            assert 1 <= row.occurrences <= n - 2


def _pcorr(values, assets, coverage=None):
    values = np.asarray(values, dtype=float)
    if coverage is None:
        coverage = np.ones(values.shape, dtype=bool)
    return PartialCorrMatrix(
        assets=tuple(assets), values=values, coverage=coverage, sample_size=900
    )


class TestSignificantEdges:
    def test_zero_rho_never_retained(self):
        values = np.eye(3)
        net = significant_edges(_pcorr(values, ["A", "B", "C"]), n=900)
        assert net.edges == ()

    def test_square_count_bonferroni_level(self):
        values = np.eye(3)
        net = significant_edges(_pcorr(values, ["A", "B", "C"]), n=900, alpha=0.05, m=53 * 53)
        assert net.effective_level == pytest.approx(0.05 / 2809, rel=1e-12)
        assert net.effective_level == pytest.approx(1.78e-5, rel=1e-2)

    def test_strong_partial_correlation_retained(self):
        values = np.eye(3)
        values[0, 1] = values[1, 0] = 0.9
        net = significant_edges(_pcorr(values, ["A", "B", "C"]), n=900, m=2809)
        assert [(e.asset_a, e.asset_b) for e in net.edges] == [("A", "B")]
        assert net.edges[0].weight == 0.9
        assert net.edges[0].p_value < net.effective_level

    def test_edge_set_shrinks_as_m_grows(self):
        c = random_spd_corr(6, seed=60)
        rho = partial_correlations(c)
        pc = _pcorr(rho.values, rho.assets)
        small_m = significant_edges(pc, n=200, m=1)
        big_m = significant_edges(pc, n=200, m=10**6)
        small_set = {(e.asset_a, e.asset_b) for e in small_m.edges}
        big_set = {(e.asset_a, e.asset_b) for e in big_m.edges}
        assert big_set <= small_set

    def test_degenerate_unit_rho_flagged(self):
        values = np.eye(3)
        values[0, 1] = values[1, 0] = 1.0
        net = significant_edges(_pcorr(values, ["A", "B", "C"]), n=900)
        edge = net.edges[0]
        assert edge.p_value == 0.0
        assert edge.degenerate

    def test_sample_too_small(self):
        values = np.eye(10)
        with pytest.raises(StatisticalPowerError):
            significant_edges(_pcorr(values, [f"A{i}" for i in range(10)]), n=11)

    def test_uncovered_pairs_skipped(self):
        values = np.eye(3)
        values[0, 1] = values[1, 0] = 0.9
        coverage = np.ones((3, 3), dtype=bool)
        coverage[0, 1] = coverage[1, 0] = False
        net = significant_edges(_pcorr(values, ["A", "B", "C"], coverage), n=900)
        assert net.edges == ()


class TestExportNetwork:
    def test_empty_edge_list_valid_documents(self):
        net = NetworkEdgeList(edges=(), alpha=0.05, m_tests=100)
        dot = export_network(net, "dot")
        assert dot.startswith("graph") and dot.rstrip().endswith("}")
        doc = json.loads(export_network(net, "json"))
        assert doc["edges"] == []
        assert export_network(net, "edgelist") == ""

    def test_single_edge(self):
        net = NetworkEdgeList(
            edges=(Edge("A", "B", 0.5, 1e-9),), alpha=0.05, m_tests=10
        )
        dot = export_network(net, "dot")
        assert '"A" -- "B"' in dot and "weight=0.5" in dot
        lines = export_network(net, "edgelist").splitlines()
        assert lines[0].split("\t")[:2] == ["A", "B"]

    def test_negative_edges_styled_distinctly(self):
        net = NetworkEdgeList(
            edges=(Edge("B", "S", -0.807, 1e-12), Edge("A", "S", 0.964, 1e-15)),
            alpha=0.05,
            m_tests=2809,
        )
        dot = export_network(net, "dot")
        neg_line = [l for l in dot.splitlines() if '"B" -- "S"' in l][0]
        pos_line = [l for l in dot.splitlines() if '"A" -- "S"' in l][0]
        assert "dashed" in neg_line
        assert "dashed" not in pos_line

    def test_unknown_format(self):
        net = NetworkEdgeList(edges=(), alpha=0.05, m_tests=1)
        with pytest.raises(PreconditionError):
            export_network(net, "gexf")

    def test_output_sorted(self):
        net = NetworkEdgeList(
            edges=(Edge("Z", "Y", 0.1, 0.0), Edge("A", "B", 0.2, 0.0)),
            alpha=0.05,
            m_tests=1,
        )
        lines = export_network(net, "edgelist").splitlines()
        assert lines[0].startswith("A\t")


class TestMasking:
    def test_pegged_pair_masks_correlations(self):
        panel = _pegged_panel()
        report = masking_report(panel, "A00", "A01", neutral="A02")
        # viewed from the peg partner, A01's correlations with others collapse
        assert report.score > 1.0

    def test_independent_assets_score_near_one(self):
        panel = make_panel(n_assets=5, n_days=400, seed=61)
        report = masking_report(panel, "A00", "A01", neutral="A02")
        assert 0.2 < report.score < 5.0

    def test_same_asset_rejected(self, small_panel):
        with pytest.raises(PreconditionError):
            masking_report(small_panel, "A00", "A00")

    def test_xy_correlations_reported_per_numeraire(self):
        panel = _pegged_panel()
        report = masking_report(panel, "A00", "A01")
        assert set(report.xy_correlations) == {"A02", "A03", "USD"}
        for r in report.xy_correlations.values():
            assert r > 0.9
