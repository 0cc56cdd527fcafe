import math

import numpy as np
import pytest

from numeraire_lab import (
    AssetLookupError,
    CovMatrix,
    DataError,
    DegenerateAssetError,
    MeanVector,
    PreconditionError,
    PricePanel,
    ReturnPanel,
    correlation_from_cov,
    correlation_transform,
    covariance_transform,
    format_matrix,
    log_returns,
    mean_transform,
    mean_vector,
    rebase_returns,
    sample_covariance,
    variance_transform,
)
from conftest import business_dates, make_panel


def panel_from_prices(prices, assets, base="USD"):
    prices = np.asarray(prices, dtype=float)
    return PricePanel(
        base_asset=base,
        dates=business_dates(prices.shape[0]),
        assets=tuple(assets),
        prices=prices,
    )


def returns_panel(values, assets, numeraire="USD"):
    values = np.asarray(values, dtype=float)
    return ReturnPanel(
        numeraire=numeraire,
        dates=business_dates(values.shape[0], start=business_dates(2)[1]),
        assets=tuple(assets),
        values=values,
    )


class TestLogReturns:
    def test_doubling_prices(self):
        panel = panel_from_prices([[1.0], [2.0], [4.0]], ["X"])
        r = log_returns(panel, "USD")
        assert r.assets == ("X",)
        np.testing.assert_allclose(r.values[:, 0], [math.log(2)] * 2, rtol=1e-15)

    def test_base_numeraire_is_plain_return(self):
        panel = make_panel(n_assets=3, n_days=30, seed=1)
        r = log_returns(panel, "USD")
        logp = np.log(panel.prices)
        np.testing.assert_allclose(r.values, np.diff(logp, axis=0), atol=1e-15)

    def test_cross_numeraire_matches_explicit_ratio(self):
        # Returns of X under numeraire Y must equal returns of the X/Y price.
        panel = make_panel(n_assets=3, n_days=50, seed=2)
        r = log_returns(panel, "A01")
        ratio = panel.prices[:, 0] / panel.prices[:, 1]  # X=A00, Y=A01
        oracle = np.diff(np.log(ratio))
        np.testing.assert_allclose(r.values[:, r.assets.index("A00")], oracle, atol=1e-12)

    def test_base_appears_with_negated_numeraire_series(self):
        panel = make_panel(n_assets=2, n_days=20, seed=3)
        under_base = log_returns(panel, "USD")
        under_a0 = log_returns(panel, "A00")
        w = under_base.values[:, 0]
        np.testing.assert_allclose(
            under_a0.values[:, under_a0.assets.index("USD")], -w, atol=1e-12
        )

    def test_unknown_numeraire(self):
        panel = make_panel(n_assets=2, n_days=10, seed=4)
        with pytest.raises(AssetLookupError):
            log_returns(panel, "ZZZ")

    def test_gap_in_numeraire_blanks_return(self):
        prices = np.array(
            [[1.0, 2.0], [1.1, np.nan], [1.2, 2.2], [1.3, 2.3]]
        )
        panel = panel_from_prices(prices, ["X", "W"])
        r = log_returns(panel, "W")
        x = r.values[:, r.assets.index("X")]
        # no W quote on day 2: no X return that day, and none on day 3 either
        # because X's reference date (day 2) lacks a W quote; day 4 is clean
        assert math.isnan(x[0])
        assert math.isnan(x[1])
        assert not math.isnan(x[2])


class TestRebase:
    def test_identity_when_same_numeraire(self):
        r = returns_panel([[0.01, 0.02]], ["X", "Y"])
        assert rebase_returns(r, "USD") is r

    def test_elementwise_subtraction(self):
        r = returns_panel([[0.02, 0.01], [-0.01, 0.01]], ["X", "W"])
        out = rebase_returns(r, "W")
        assert out.numeraire == "W"
        assert out.assets == ("X", "USD")
        np.testing.assert_allclose(out.values[:, 0], [0.01, -0.02], atol=1e-18)
        np.testing.assert_allclose(out.values[:, 1], [-0.01, -0.01], atol=1e-18)

    def test_round_trip_exact_on_dyadic_data(self):
        rng = np.random.default_rng(5)
        vals = rng.integers(-64, 64, size=(40, 4)) / 1024.0
        r = returns_panel(vals, ["X", "Y", "Z", "W"])
        back = rebase_returns(rebase_returns(r, "W"), "USD")
        assert back.assets == r.assets
        assert np.array_equal(back.values, r.values)

    def test_round_trip_tight_on_random_data(self):
        rng = np.random.default_rng(6)
        r = returns_panel(rng.normal(0, 0.01, (200, 5)), list("ABCDE"))
        back = rebase_returns(rebase_returns(r, "C"), "USD")
        np.testing.assert_allclose(back.values, r.values, atol=1e-16)


class TestMeans:
    def test_doubling_mean(self):
        r = returns_panel([[math.log(2)], [math.log(2)]], ["X"])
        assert mean_vector(r).values[0] == pytest.approx(math.log(2), abs=1e-15)

    def test_zero_returns(self):
        r = returns_panel(np.zeros((5, 2)), ["X", "Y"])
        assert mean_vector(r).values.tolist() == [0.0, 0.0]

    def test_matches_fsum_oracle(self):
        rng = np.random.default_rng(7)
        vals = rng.normal(0, 0.01, (301, 3))
        vals[::7, 1] = np.nan
        r = returns_panel(vals, ["X", "Y", "Z"])
        mv = mean_vector(r)
        for j in range(3):
            col = vals[:, j]
            col = col[~np.isnan(col)]
            oracle = math.fsum(col) / len(col)
            assert mv.values[j] == pytest.approx(oracle, abs=1e-16)

    def test_all_missing_asset_errors(self):
        vals = np.full((4, 2), 0.01)
        vals[:, 1] = np.nan
        with pytest.raises(DataError, match="Y"):
            mean_vector(returns_panel(vals, ["X", "Y"]))

    def test_mean_transform_arithmetic(self):
        mv = MeanVector(numeraire="USD", assets=("X", "W"), values=np.array([0.010, 0.003]))
        out = mean_transform(mv, "W")
        assert out.numeraire == "W"
        assert out.assets == ("X", "USD")
        assert out.values[0] == pytest.approx(0.007, abs=1e-18)
        assert out.values[1] == -0.003

    def test_mean_transform_identity(self):
        mv = MeanVector(numeraire="USD", assets=("X",), values=np.array([0.01]))
        assert mean_transform(mv, "USD") is mv

    def test_transform_equals_measure_after_rebase(self):
        rng = np.random.default_rng(8)
        r = returns_panel(rng.normal(0, 0.01, (100, 4)), list("ABCD"))
        direct = mean_vector(rebase_returns(r, "C"))
        transformed = mean_transform(mean_vector(r), "C")
        assert direct.assets == transformed.assets
        np.testing.assert_allclose(direct.values, transformed.values, atol=1e-12)


class TestSampleCovariance:
    def test_constant_series_zero_covariance(self):
        vals = np.column_stack([np.full(8, 0.5), np.linspace(-1, 1, 8)])
        cov = sample_covariance(returns_panel(vals, ["C", "X"]))
        assert cov.values[0, 0] == 0.0
        assert cov.values[0, 1] == 0.0

    def test_hand_arithmetic_two_points(self):
        cov = sample_covariance(returns_panel([[1.0, 1.0], [-1.0, -1.0]], ["X", "Y"]))
        assert cov.values[0, 1] == pytest.approx(2.0, abs=1e-15)
        assert cov.sample_size == 2

    def test_matches_double_loop_oracle(self):
        rng = np.random.default_rng(9)
        vals = rng.normal(0, 0.01, (50, 5))
        r = returns_panel(vals, list("ABCDE"))
        cov = sample_covariance(r)
        for i in range(5):
            for j in range(5):
                xi, xj = vals[:, i], vals[:, j]
                oracle = float(
                    np.sum((xi - xi.mean()) * (xj - xj.mean())) / (len(xi) - 1)
                )
                assert cov.values[i, j] == pytest.approx(oracle, abs=1e-12)

    def test_pairwise_deletion_with_gaps(self):
        rng = np.random.default_rng(10)
        vals = rng.normal(0, 0.01, (60, 3))
        vals[:10, 0] = np.nan
        vals[50:, 2] = np.nan
        cov = sample_covariance(returns_panel(vals, ["A", "B", "C"]))
        common = ~np.isnan(vals[:, 0]) & ~np.isnan(vals[:, 2])
        xi, xj = vals[common, 0], vals[common, 2]
        oracle = float(np.sum((xi - xi.mean()) * (xj - xj.mean())) / (common.sum() - 1))
        assert cov.values[0, 2] == pytest.approx(oracle, abs=1e-14)
        assert cov.sample_size == int(common.sum())

    def test_too_few_common_rows(self):
        vals = np.array([[0.01, np.nan], [0.02, np.nan], [np.nan, 0.01], [np.nan, 0.02]])
        with pytest.raises(DataError, match=r"\(X, Y\)"):
            sample_covariance(returns_panel(vals, ["X", "Y"]))

    def test_symmetry_is_exact(self):
        r = returns_panel(np.random.default_rng(11).normal(0, 1, (30, 6)), list("ABCDEF"))
        cov = sample_covariance(r)
        assert np.array_equal(cov.values, cov.values.T)


def _cov_xyw():
    # C_xy=0.5, C_xw=0.2, C_yw=0.1, C_ww=0.4, unit variances for x and y
    values = np.array(
        [
            [1.0, 0.5, 0.2],
            [0.5, 1.0, 0.1],
            [0.2, 0.1, 0.4],
        ]
    )
    return CovMatrix(numeraire="USD", assets=("X", "Y", "W"), values=values, sample_size=100)


class TestCovarianceTransform:
    def test_identity_when_same_numeraire(self):
        cov = _cov_xyw()
        assert covariance_transform(cov, "USD") is cov

    def test_arithmetic_example(self):
        out = covariance_transform(_cov_xyw(), "W")
        assert out.numeraire == "W"
        assert out.assets == ("X", "Y", "USD")
        assert out.entry("X", "Y") == pytest.approx(0.6, abs=1e-15)
        # old numeraire's variance under W equals C_ww
        assert out.entry("USD", "USD") == pytest.approx(0.4, abs=1e-15)

    def test_matches_series_level_oracle(self):
        rng = np.random.default_rng(12)
        r = returns_panel(rng.normal(0, 0.01, (300, 5)), list("ABCDE"))
        direct = sample_covariance(rebase_returns(r, "D"))
        transformed = covariance_transform(sample_covariance(r), "D")
        assert direct.assets == transformed.assets
        np.testing.assert_allclose(direct.values, transformed.values, atol=1e-10)

    def test_round_trip(self):
        cov = _cov_xyw()
        back = covariance_transform(covariance_transform(cov, "W"), "USD")
        assert back.assets == cov.assets
        np.testing.assert_allclose(back.values, cov.values, atol=1e-12)

    def test_composition(self):
        rng = np.random.default_rng(13)
        r = returns_panel(rng.normal(0, 0.01, (200, 5)), list("ABCDE"))
        cov = sample_covariance(r)
        via_b = covariance_transform(covariance_transform(cov, "B"), "E")
        direct = covariance_transform(cov, "E")
        assert set(via_b.assets) == set(direct.assets)
        bi = [via_b.assets.index(a) for a in direct.assets]
        np.testing.assert_allclose(
            via_b.values[np.ix_(bi, bi)], direct.values, atol=1e-10
        )

    def test_output_symmetry_exact(self):
        rng = np.random.default_rng(14)
        r = returns_panel(rng.normal(0, 0.01, (100, 6)), list("ABCDEF"))
        out = covariance_transform(sample_covariance(r), "C")
        assert np.array_equal(out.values, out.values.T)


class TestVarianceTransform:
    def test_arithmetic(self):
        cov = CovMatrix(
            numeraire="USD",
            assets=("X", "W"),
            values=np.array([[1.0, 0.2], [0.2, 0.4]]),
            sample_size=10,
        )
        assert variance_transform(cov, "X", "W") == pytest.approx(1.0, abs=1e-15)

    def test_perfect_peg_gives_zero(self):
        v = 0.3
        cov = CovMatrix(
            numeraire="USD",
            assets=("X", "W"),
            values=np.array([[v, v], [v, v]]),
            sample_size=10,
        )
        assert variance_transform(cov, "X", "W") == 0.0

    def test_equals_transform_diagonal(self):
        rng = np.random.default_rng(15)
        r = returns_panel(rng.normal(0, 0.01, (150, 4)), list("ABCD"))
        cov = sample_covariance(r)
        full = covariance_transform(cov, "C")
        for asset in "ABD":
            assert variance_transform(cov, asset, "C") == pytest.approx(
                full.entry(asset, asset), abs=1e-15
            )

    def test_numeraire_own_variance_rejected(self):
        with pytest.raises(PreconditionError):
            variance_transform(_cov_xyw(), "W", "W")


class TestCorrelationTransform:
    def test_arithmetic_example(self):
        out = correlation_transform(_cov_xyw(), "W")
        assert out.entry("X", "Y") == pytest.approx(0.6 / math.sqrt(1.2), abs=1e-12)
        assert np.all(np.diag(out.values) == 1.0)

    def test_perfect_correlation_survives_any_numeraire(self):
        rng = np.random.default_rng(16)
        x = rng.normal(0, 0.01, 100)
        w = rng.normal(0, 0.01, 100)
        vals = np.column_stack([x, x, w])
        cov = sample_covariance(returns_panel(vals, ["X1", "X2", "W"]))
        out = correlation_transform(cov, "W")
        assert out.entry("X1", "X2") == pytest.approx(1.0, abs=1e-10)

    def test_matches_series_level_oracle(self):
        rng = np.random.default_rng(17)
        r = returns_panel(rng.normal(0, 0.01, (250, 5)), list("ABCDE"))
        cov = sample_covariance(r)
        direct = correlation_from_cov(sample_covariance(rebase_returns(r, "B")))
        transformed = correlation_transform(cov, "B")
        assert direct.assets == transformed.assets
        np.testing.assert_allclose(direct.values, transformed.values, atol=1e-10)

    def test_pegged_asset_is_degenerate(self):
        rng = np.random.default_rng(18)
        w = rng.normal(0, 0.01, 100)
        x = rng.normal(0, 0.01, 100)
        vals = np.column_stack([x, w, w])  # "P" identical to the new numeraire
        cov = sample_covariance(returns_panel(vals, ["X", "P", "W"]))
        with pytest.raises(DegenerateAssetError, match="P"):
            correlation_transform(cov, "W")


class TestMatrixExport:
    def test_header_and_metadata(self):
        cov = _cov_xyw()
        text = format_matrix(cov)
        lines = text.splitlines()
        assert lines[0] == "# numeraire=USD n=100"
        assert lines[1] == "\tX\tY\tW"
        assert lines[2].startswith("X\t1\t0.5\t")

    def test_seventeen_significant_digits(self):
        v = 1 / 3
        cov = CovMatrix(
            numeraire="EUR",
            assets=("X",),
            values=np.array([[v]]),
            sample_size=5,
        )
        assert format(v, ".17g") in format_matrix(cov)
