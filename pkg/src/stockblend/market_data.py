"""Ingestion, validation, alignment and partitioning of daily price series.

A :class:`PriceSeries` is an immutable (symbol, dates, closes) triple of
trading-day closing prices.  A :class:`MarketPanel` groups the market index,
a sector index and the sector's companies; panels are aligned to the
intersection of all date vectors before any feature work.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from datetime import date

from .errors import AlignmentError, CsvParseError, ValidationError


@dataclass(frozen=True)
class PriceSeries:
    """Daily closing prices for one symbol, strictly ordered by date."""

    symbol: str
    dates: tuple[date, ...]
    closes: tuple[float, ...]

    def __post_init__(self):
        if len(self.dates) != len(self.closes):
            raise ValidationError(
                f"{self.symbol}: {len(self.dates)} dates vs {len(self.closes)} closes"
            )
        for a, b in zip(self.dates, self.dates[1:]):
            if a >= b:
                raise ValidationError(f"{self.symbol}: dates not strictly increasing at {b}")
        for d, c in zip(self.dates, self.closes):
            if not c > 0:
                raise ValidationError(f"{self.symbol}: non-positive close {c} on {d}")

    def __len__(self) -> int:
        return len(self.dates)

    def restrict(self, keep: set[date]) -> "PriceSeries":
        """Return the sub-series on the given dates, order preserved."""
        pairs = [(d, c) for d, c in zip(self.dates, self.closes) if d in keep]
        return PriceSeries(
            self.symbol,
            tuple(d for d, _ in pairs),
            tuple(c for _, c in pairs),
        )

    def index_of(self, when: date) -> int:
        """Position of ``when`` in the date vector; ValidationError if absent."""
        try:
            return self.dates.index(when)
        except ValueError:
            raise ValidationError(f"{self.symbol}: no trading day {when}") from None


@dataclass(frozen=True)
class MarketPanel:
    """Market index, sector index and the sector's company series."""

    market_index: PriceSeries
    sector_index: PriceSeries
    companies: tuple[PriceSeries, ...]

    def __post_init__(self):
        if not self.companies:
            raise ValidationError("panel needs at least one company series")
        symbols = [c.symbol for c in self.companies]
        if len(set(symbols)) != len(symbols):
            raise ValidationError(f"duplicate company symbols: {symbols}")

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(c.symbol for c in self.companies)

    def company(self, symbol: str) -> PriceSeries:
        for c in self.companies:
            if c.symbol == symbol:
                return c
        raise ValidationError(
            f"unknown company {symbol!r}; available: {', '.join(self.symbols)}"
        )

    def is_aligned(self) -> bool:
        ref = self.market_index.dates
        return self.sector_index.dates == ref and all(
            c.dates == ref for c in self.companies
        )


@dataclass(frozen=True)
class SplitSpec:
    """Chronological partition: leading training block, tail of it held out
    as validation, everything after the block as test."""

    train_count: int
    validation_fraction: float = 0.2

    def __post_init__(self):
        if self.train_count < 1:
            raise ValidationError(f"train_count must be positive, got {self.train_count}")
        if not 0.0 <= self.validation_fraction <= 0.5:
            raise ValidationError(
                f"validation_fraction must be in [0, 0.5], got {self.validation_fraction}"
            )


def parse_price_csv(text: str, symbol: str = "") -> PriceSeries:
    """Parse a ``date,close`` CSV document into a validated PriceSeries.

    The header must name a ``date`` and a ``close`` column (case-insensitive,
    extra columns ignored).  Rows may appear in any order; the result is
    sorted by date.  Duplicate dates and non-positive prices are rejected.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise CsvParseError("empty document", 1) from None
    names = [h.strip().lower() for h in header]
    if "date" not in names or "close" not in names:
        raise CsvParseError(f"header must name 'date' and 'close' columns, got {header}", 1)
    date_col, close_col = names.index("date"), names.index("close")

    rows: list[tuple[date, float]] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) <= max(date_col, close_col):
            raise CsvParseError(f"expected at least {max(date_col, close_col) + 1} fields", lineno)
        try:
            when = date.fromisoformat(row[date_col].strip())
        except ValueError:
            raise CsvParseError(f"bad date {row[date_col]!r}", lineno) from None
        try:
            close = float(row[close_col])
        except ValueError:
            raise CsvParseError(f"bad price {row[close_col]!r}", lineno) from None
        rows.append((when, close))

    rows.sort(key=lambda pair: pair[0])
    for (d1, _), (d2, _) in zip(rows, rows[1:]):
        if d1 == d2:
            raise ValidationError(f"{symbol or 'series'}: duplicate date {d1}")
    return PriceSeries(symbol, tuple(d for d, _ in rows), tuple(c for _, c in rows))


def serialize_price_csv(series: PriceSeries) -> str:
    """Inverse of :func:`parse_price_csv`; closes written with full
    round-trip precision (repr)."""
    lines = ["date,close"]
    lines.extend(f"{d.isoformat()},{c!r}" for d, c in zip(series.dates, series.closes))
    return "\n".join(lines) + "\n"


def align(panel: MarketPanel) -> MarketPanel:
    """Restrict every series to the intersection of all date sets.

    Order is preserved; an empty intersection raises AlignmentError.
    """
    for series in (panel.market_index, panel.sector_index, *panel.companies):
        if len(series) == 0:
            raise AlignmentError(f"{series.symbol}: empty series")
    common = set(panel.market_index.dates) & set(panel.sector_index.dates)
    for c in panel.companies:
        common &= set(c.dates)
    if not common:
        raise AlignmentError("no common trading dates across panel series")
    return MarketPanel(
        market_index=panel.market_index.restrict(common),
        sector_index=panel.sector_index.restrict(common),
        companies=tuple(c.restrict(common) for c in panel.companies),
    )


def derive_sector_index(companies: list[PriceSeries] | tuple[PriceSeries, ...],
                        symbol: str = "SECTOR") -> PriceSeries:
    """Equal-weighted mean of aligned company closes, one value per date."""
    if not companies:
        raise ValidationError("cannot derive a sector index from zero companies")
    ref = companies[0].dates
    for c in companies[1:]:
        if c.dates != ref:
            raise ValidationError("companies must be date-aligned to derive a sector index")
    n = len(companies)
    closes = tuple(sum(c.closes[i] for c in companies) / n for i in range(len(ref)))
    return PriceSeries(symbol, ref, closes)


def split(samples, spec: SplitSpec):
    """Partition an ordered dataset into (train, validation, test).

    ``samples`` may be any chronologically ordered, sliceable dataset.  The
    first ``train_count`` items form the learning block; its trailing
    ``validation_fraction`` share (train sub-block rounded down via floor)
    becomes validation.  Everything after index ``train_count`` is test.
    No shuffling, no overlaps.
    """
    total = len(samples)
    if spec.train_count >= total:
        raise ValidationError(
            f"train_count {spec.train_count} must be < sample count {total}"
        )
    n_train = int(spec.train_count * (1.0 - spec.validation_fraction))
    return (
        samples[:n_train],
        samples[n_train:spec.train_count],
        samples[spec.train_count:],
    )


def with_derived_sector_index(panel: MarketPanel) -> MarketPanel:
    """Replace the sector index with the equal-weighted company mean."""
    return replace(panel, sector_index=derive_sector_index(panel.companies))
