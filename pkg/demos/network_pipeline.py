"""End-to-end pipeline: raw panel -> cleaned -> network of robust links.

Mirrors the command-line flow in library calls: parse a price panel with
gaps, drop assets that fail the coverage rules, align stale quotes to
their reference dates, assemble the numeraire-invariant partial
correlations, and keep only the Bonferroni-significant edges.

Run with:  python3 demos/network_pipeline.py
"""

import io
from datetime import date, timedelta

import numpy as np

from numeraire_lab import (
    align_and_fill,
    apply_exclusions,
    assemble_full_partial_matrix,
    export_network,
    most_similar,
    parse_price_panel,
    significant_edges,
    threshold_components,
    correlation_from_cov,
    log_returns,
    sample_covariance,
    write_price_panel,
    PricePanel,
)


def business_days(n, start=date(2014, 1, 2)):
    days = []
    d = start
    while len(days) < n:
        if d.weekday() < 5:
            days.append(d)
        d += timedelta(days=1)
    return tuple(days)


def raw_csv(n_days=350, seed=9):
    """A CSV panel: one tight peg, one sparse column, one stale column."""
    rng = np.random.default_rng(seed)
    anchor = np.exp(np.cumsum(rng.normal(0, 0.01, n_days)))
    cols = {
        "ANC": anchor,
        "PEG": 2.0 * anchor * np.exp(np.cumsum(rng.normal(0, 5e-4, n_days))),
    }
    for i in range(4):
        cols[f"FR{i}"] = np.exp(np.cumsum(rng.normal(0, 0.01, n_days)))
    prices = np.column_stack(list(cols.values()))
    # SPARSE: too many missing quotes -> excluded by the coverage rule
    sparse = np.exp(np.cumsum(rng.normal(0, 0.01, n_days)))
    sparse[rng.choice(n_days, size=15, replace=False)] = np.nan
    prices = np.column_stack([prices, sparse])
    panel = PricePanel(
        base_asset="USD",
        dates=business_days(n_days),
        assets=tuple(cols) + ("SPARSE",),
        prices=prices,
    )
    return write_price_panel(panel)


def main():
    text = raw_csv()
    panel = parse_price_panel(io.StringIO(text), base="USD")
    print(f"parsed {len(panel.assets)} assets x {len(panel.dates)} dates")

    cleaned, removals = apply_exclusions(panel)
    for record in removals:
        print(f"  excluded {record.asset}: {record.reason}")
    aligned = align_and_fill(cleaned)

    # Quick look: threshold clusters of the plain correlation matrix.
    corr = correlation_from_cov(sample_covariance(log_returns(aligned, "USD")))
    for report in threshold_components(corr, [0.9, 0.5]):
        names = ["/".join(c) for c in report.components]
        print(f"  components at r>{report.threshold:g}: {names or 'none'}")

    # Robustness check: which partner wins under (almost) every numeraire?
    table = most_similar(aligned)
    for row in table.rows:
        if row.occurrences >= len(table.rows) - 2:
            print(f"  {row.asset} most similar to {','.join(row.most_similar)} "
                  f"under {row.occurrences} numeraires")

    # Invariant partial correlations, then the significance filter.
    assembled = assemble_full_partial_matrix(aligned, ["USD", "FR0"])
    matrix = assembled.matrix
    network = significant_edges(matrix, n=matrix.sample_size, alpha=0.05)
    print(f"{len(network.edges)} edges survive Bonferroni at "
          f"effective level {network.effective_level:.2e}")
    for edge in network.edges:
        print(f"  {edge.asset_a} -- {edge.asset_b}  "
              f"rho={edge.weight:+.3f}  p={edge.p_value:.2e}")

    print("\nDOT export:")
    print(export_network(network, "dot"))


if __name__ == "__main__":
    main()
