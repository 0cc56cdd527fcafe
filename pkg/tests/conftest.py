from datetime import date, timedelta

import numpy as np
import pytest

from numeraire_lab import PricePanel, align_and_fill


def business_dates(n, start=date(2014, 1, 2)):
    """n consecutive weekday dates."""
    out = []
    d = start
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return tuple(out)


def make_panel(n_assets=10, n_days=500, seed=0, base="USD", vol=0.01, drift=0.0):
    """Gap-free synthetic panel: geometric random walks quoted in ``base``."""
    rng = np.random.default_rng(seed)
    steps = rng.normal(drift, vol, size=(n_days, n_assets))
    logp = np.cumsum(steps, axis=0) + rng.normal(0, 1, size=n_assets)
    prices = np.exp(logp)
    assets = tuple(f"A{i:02d}" for i in range(n_assets))
    return PricePanel(
        base_asset=base,
        dates=business_dates(n_days),
        assets=assets,
        prices=prices,
    )


@pytest.fixture
def small_panel():
    return make_panel(n_assets=5, n_days=60, seed=7)


@pytest.fixture
def aligned_small_panel(small_panel):
    return align_and_fill(small_panel)
