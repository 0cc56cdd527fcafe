"""Price panel ingestion: parsing, exclusion rules, and date alignment.

The raw input is a delimited table (comma or tab, auto-detected) whose first
column holds ISO-8601 dates and whose remaining columns are asset codes; every
price is quoted in a single declared base asset. Empty cells mean missing.
Cleaning applies two per-asset rules: drop assets with too many missing quotes
and drop assets whose quote against the base is exactly constant over a run of
consecutive present business days. Alignment maps each present business day to
the most recent earlier present day (Friday-for-Monday, day-before-holiday),
which is the reference date used for daily log returns.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import date
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AlignmentError,
    DataError,
    ParseError,
    PreconditionError,
    SchemaError,
)

__all__ = [
    "PricePanel",
    "AlignedPanel",
    "RemovalRecord",
    "parse_price_panel",
    "apply_exclusions",
    "align_and_fill",
    "format_removal_report",
    "write_price_panel",
]


@dataclass(frozen=True)
class PricePanel:
    """Dated table of asset prices quoted in ``base_asset``.

    ``prices[t, i]`` is units of base per unit of ``assets[i]`` on
    ``dates[t]``; NaN marks a missing quote.
    """

    base_asset: str
    dates: tuple[date, ...]
    assets: tuple[str, ...]
    prices: np.ndarray

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float)
        object.__setattr__(self, "prices", prices)
        if prices.shape != (len(self.dates), len(self.assets)):
            raise SchemaError(
                f"price matrix shape {prices.shape} does not match "
                f"{len(self.dates)} dates x {len(self.assets)} assets"
            )
        if any(b >= a for a, b in zip(self.dates[1:], self.dates)):
            raise DataError("dates must be strictly increasing")
        if self.base_asset in self.assets:
            raise SchemaError(f"base asset {self.base_asset} listed among assets")
        if len(set(self.assets)) != len(self.assets):
            raise SchemaError("duplicate asset codes")
        present_vals = prices[~np.isnan(prices)]
        if present_vals.size and (
            not np.all(np.isfinite(present_vals)) or np.any(present_vals <= 0)
        ):
            raise DataError("present prices must be strictly positive and finite")

    @property
    def present(self) -> np.ndarray:
        """Boolean mask, True where a price is quoted."""
        return ~np.isnan(self.prices)

    def column(self, asset: str) -> np.ndarray:
        from .errors import AssetLookupError

        try:
            i = self.assets.index(asset)
        except ValueError:
            raise AssetLookupError(f"unknown asset code {asset!r}") from None
        return self.prices[:, i]


@dataclass(frozen=True)
class AlignedPanel:
    """A price panel plus, per asset, the map return-date -> reference date."""

    panel: PricePanel
    reference_dates: dict[str, dict[date, date]] = field(repr=False)


@dataclass(frozen=True)
class RemovalRecord:
    asset: str
    reason: str


def _detect_delimiter(header_line: str) -> str:
    return "\t" if "\t" in header_line else ","


def parse_price_panel(source, base: str) -> PricePanel:
    """Parse a delimited price table into a :class:`PricePanel`.

    ``source`` is a character stream or a string. The first column must hold
    ISO-8601 dates; remaining headers are asset codes. Empty cells are
    missing. Rows are reordered by date; duplicate dates and non-numeric or
    non-positive cells are rejected.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    text = source.read()
    lines = text.splitlines()
    # Skip leading comment lines (provenance headers from our own exports).
    offset = 0
    while offset < len(lines) and lines[offset].startswith("#"):
        offset += 1
    if offset >= len(lines) or not lines[offset].strip():
        raise ParseError("no data rows")
    delim = _detect_delimiter(lines[offset])
    reader = csv.reader(lines[offset:], delimiter=delim)
    header = next(reader)
    if len(header) < 2:
        raise SchemaError("header must contain a date column and at least one asset")
    assets = [h.strip() for h in header[1:]]
    seen: set[str] = set()
    for a in assets:
        if not a:
            raise SchemaError("empty asset code in header")
        if a in seen:
            raise SchemaError(f"duplicate asset column {a!r}")
        seen.add(a)
    if base in seen:
        raise SchemaError(f"base asset {base!r} appears as a data column")

    rows: list[tuple[date, list[float]]] = []
    dates_seen: set[date] = set()
    for lineno, row in enumerate(reader, start=offset + 2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            d = date.fromisoformat(row[0].strip())
        except ValueError:
            raise ParseError(f"line {lineno}: malformed date {row[0]!r}") from None
        if d in dates_seen:
            raise ParseError(f"line {lineno}: duplicate date {d.isoformat()}")
        dates_seen.add(d)
        values: list[float] = []
        for a, cell in zip(assets, row[1:]):
            cell = cell.strip()
            if not cell:
                values.append(math.nan)
                continue
            try:
                v = float(cell)
            except ValueError:
                raise DataError(
                    f"line {lineno}, asset {a}: non-numeric cell {cell!r}"
                ) from None
            if not math.isfinite(v) or v <= 0:
                raise DataError(f"line {lineno}, asset {a}: non-positive price {cell!r}")
            values.append(v)
        rows.append((d, values))
    if not rows:
        raise ParseError("no data rows")
    rows.sort(key=lambda r: r[0])
    dates = tuple(r[0] for r in rows)
    prices = np.array([r[1] for r in rows], dtype=float)
    return PricePanel(base_asset=base, dates=dates, assets=tuple(assets), prices=prices)


def _max_constant_run(values: np.ndarray) -> int:
    """Longest run of bit-identical consecutive values (gaps compressed out)."""
    present = values[~np.isnan(values)]
    if present.size == 0:
        return 0
    best = run = 1
    for prev, cur in zip(present, present[1:]):
        run = run + 1 if cur == prev else 1
        best = max(best, run)
    return best


def apply_exclusions(
    panel: PricePanel,
    max_missing: int = 10,
    constant_run: int = 5,
    keep: Iterable[str] = (),
) -> tuple[PricePanel, list[RemovalRecord]]:
    """Drop assets with too many gaps or constant quoted prices.

    An asset is removed when it has at least ``max_missing`` missing quotes
    (unless listed in ``keep``), or when its quote against the panel base is
    exactly constant over at least ``constant_run`` consecutive present
    business days. Returns the surviving panel and the removal report;
    missing-value removals are recorded before constant-run removals.
    """
    if max_missing < 0:
        raise PreconditionError("max_missing must be >= 0")
    if constant_run < 2:
        raise PreconditionError("constant_run must be >= 2")
    keep_set = set(keep)
    report: list[RemovalRecord] = []
    removed: set[str] = set()
    missing_counts = np.isnan(panel.prices).sum(axis=0)
    for i, asset in enumerate(panel.assets):
        if missing_counts[i] >= max_missing and asset not in keep_set:
            report.append(
                RemovalRecord(asset, f"missing values {missing_counts[i]} >= {max_missing}")
            )
            removed.add(asset)
    for i, asset in enumerate(panel.assets):
        run = _max_constant_run(panel.prices[:, i])
        if run >= constant_run:
            report.append(
                RemovalRecord(asset, f"constant price run {run} >= {constant_run}")
            )
            removed.add(asset)
    if not removed:
        return panel, report
    keep_idx = [i for i, a in enumerate(panel.assets) if a not in removed]
    surviving = PricePanel(
        base_asset=panel.base_asset,
        dates=panel.dates,
        assets=tuple(panel.assets[i] for i in keep_idx),
        prices=panel.prices[:, keep_idx],
    )
    return surviving, report


def format_removal_report(report: Sequence[RemovalRecord]) -> str:
    """Plain-text removal report, one ``ASSET<TAB>reason`` line per record."""
    return "".join(f"{r.asset}\t{r.reason}\n" for r in report)


def align_and_fill(panel: PricePanel) -> AlignedPanel:
    """Attach per-asset reference dates for return computation.

    For each present quote, the reference is the most recent earlier date with
    a present quote for the same asset. No prices are invented; assets with
    sporadic gaps are retained, but an asset with fewer than two present
    quotes cannot yield any return and is an error.
    """
    present = panel.present
    refs: dict[str, dict[date, date]] = {}
    for i, asset in enumerate(panel.assets):
        idx = np.flatnonzero(present[:, i])
        if idx.size < 2:
            raise AlignmentError(
                f"asset {asset}: fewer than 2 present prices, cannot align"
            )
        refs[asset] = {
            panel.dates[t]: panel.dates[r] for r, t in zip(idx, idx[1:])
        }
    return AlignedPanel(panel=panel, reference_dates=refs)


def write_price_panel(panel: PricePanel) -> str:
    """Serialize a panel back to CSV (empty cells for missing quotes)."""
    out = io.StringIO()
    out.write("date," + ",".join(panel.assets) + "\n")
    for t, d in enumerate(panel.dates):
        cells = [
            "" if math.isnan(v) else format(v, ".17g") for v in panel.prices[t]
        ]
        out.write(d.isoformat() + "," + ",".join(cells) + "\n")
    return out.getvalue()
