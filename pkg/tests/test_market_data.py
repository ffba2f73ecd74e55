from datetime import date

import pytest
from hypothesis import given, strategies as st

from stockblend.errors import AlignmentError, CsvParseError, ValidationError
from stockblend.market_data import (
    MarketPanel,
    PriceSeries,
    SplitSpec,
    align,
    derive_sector_index,
    parse_price_csv,
    serialize_price_csv,
    split,
)

from conftest import make_series


class TestPriceSeries:
    def test_length_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            PriceSeries("X", (date(2020, 1, 1),), (1.0, 2.0))

    def test_dates_must_increase(self):
        with pytest.raises(ValidationError):
            PriceSeries("X", (date(2020, 1, 2), date(2020, 1, 1)), (1.0, 2.0))

    def test_duplicate_dates_rejected(self):
        with pytest.raises(ValidationError):
            PriceSeries("X", (date(2020, 1, 1), date(2020, 1, 1)), (1.0, 2.0))

    def test_nonpositive_close_rejected(self):
        with pytest.raises(ValidationError):
            PriceSeries("X", (date(2020, 1, 1),), (0.0,))

    def test_index_of_unknown_date(self):
        series = make_series("X", [1.0, 2.0])
        with pytest.raises(ValidationError):
            series.index_of(date(1999, 1, 1))


class TestParseCsv:
    def test_basic_parse(self):
        series = parse_price_csv("date,close\n2020-01-01,100\n2020-01-02,101")
        assert len(series) == 2
        assert series.closes == (100.0, 101.0)
        assert series.dates == (date(2020, 1, 1), date(2020, 1, 2))

    def test_rows_sorted_by_date(self):
        text = "date,close\n2020-01-02,101\n2020-01-01,100"
        series = parse_price_csv(text)
        assert series.closes == (100.0, 101.0)

    def test_nonpositive_price_rejected(self):
        with pytest.raises(ValidationError):
            parse_price_csv("date,close\n2020-01-01,-5")

    def test_duplicate_date_rejected(self):
        with pytest.raises(ValidationError):
            parse_price_csv("date,close\n2020-01-01,5\n2020-01-01,6")

    def test_malformed_row_reports_line(self):
        with pytest.raises(CsvParseError) as info:
            parse_price_csv("date,close\n2020-01-01,100\nnot-a-date,7")
        assert info.value.line_number == 3

    def test_bad_price_reports_line(self):
        with pytest.raises(CsvParseError) as info:
            parse_price_csv("date,close\n2020-01-01,abc")
        assert info.value.line_number == 2

    def test_header_required(self):
        with pytest.raises(CsvParseError):
            parse_price_csv("when,price\n2020-01-01,100")

    def test_extra_columns_ignored(self):
        series = parse_price_csv("volume,date,close\n5,2020-01-01,100")
        assert series.closes == (100.0,)

    def test_round_trip_bit_identical(self):
        closes = [100.123456789012345, 99.1, 101.00000000000003]
        original = make_series("RT", closes)
        again = parse_price_csv(serialize_price_csv(original), symbol="RT")
        assert again.closes == original.closes
        assert again.dates == original.dates


class TestAlign:
    def _panel(self, market, sector, companies):
        return MarketPanel(market, sector, tuple(companies))

    def test_intersection(self):
        a = make_series("A", [1, 2, 3], start=date(2021, 1, 4))
        b = make_series("B", [4, 5, 6], start=date(2021, 1, 5))
        panel = self._panel(a, a, [b])
        aligned = align(panel)
        # A covers Mon-Wed, B covers Tue-Thu; intersection is Tue+Wed
        assert aligned.market_index.dates == (date(2021, 1, 5), date(2021, 1, 6))
        assert aligned.companies[0].closes == (4.0, 5.0)

    def test_identity_when_already_aligned(self):
        a = make_series("A", [1, 2, 3])
        b = make_series("B", [4, 5, 6])
        aligned = align(self._panel(a, a, [b]))
        assert aligned.market_index == a
        assert aligned.companies[0] == b

    def test_disjoint_dates_error(self):
        a = make_series("A", [1, 2], start=date(2021, 1, 4))
        b = make_series("B", [3, 4], start=date(2021, 2, 1))
        with pytest.raises(AlignmentError):
            align(self._panel(a, a, [b]))

    def test_idempotent(self):
        a = make_series("A", [1, 2, 3, 4], start=date(2021, 1, 4))
        b = make_series("B", [4, 5, 6], start=date(2021, 1, 5))
        once = align(self._panel(a, a, [b]))
        twice = align(once)
        assert once == twice

    def test_empty_series_error(self):
        a = make_series("A", [1, 2])
        empty = PriceSeries("E", (), ())
        with pytest.raises(AlignmentError):
            align(self._panel(a, a, [empty]))


class TestPanel:
    def test_needs_companies(self):
        a = make_series("A", [1])
        with pytest.raises(ValidationError):
            MarketPanel(a, a, ())

    def test_duplicate_symbols_rejected(self):
        a = make_series("A", [1])
        with pytest.raises(ValidationError):
            MarketPanel(a, a, (a, a))

    def test_unknown_company_lists_available(self):
        a = make_series("A", [1])
        b = make_series("B", [2])
        panel = MarketPanel(a, a, (a, b))
        with pytest.raises(ValidationError) as info:
            panel.company("Z")
        assert "A" in str(info.value) and "B" in str(info.value)


class TestDeriveSectorIndex:
    def test_equal_weighted_mean(self):
        a = make_series("A", [100, 110])
        b = make_series("B", [200, 190])
        sector = derive_sector_index([a, b])
        assert sector.closes == (150.0, 150.0)

    def test_single_company_copies_closes(self):
        a = make_series("A", [7, 8])
        assert derive_sector_index([a]).closes == a.closes

    def test_empty_list_error(self):
        with pytest.raises(ValidationError):
            derive_sector_index([])

    def test_unaligned_error(self):
        a = make_series("A", [1, 2], start=date(2021, 1, 4))
        b = make_series("B", [1, 2], start=date(2021, 1, 5))
        with pytest.raises(ValidationError):
            derive_sector_index([a, b])


class TestSplit:
    def test_reference_counts_without_validation(self):
        samples = list(range(503))
        train, val, test = split(samples, SplitSpec(402, validation_fraction=0.0))
        assert (len(train), len(val), len(test)) == (402, 0, 101)

    def test_counts_with_validation_tail(self):
        # index-arithmetic oracle: floor(402 * 0.8) = 321, remainder 81
        n_train = int(402 * (1.0 - 0.2))
        assert n_train == 321
        samples = list(range(503))
        train, val, test = split(samples, SplitSpec(402, validation_fraction=0.2))
        assert (len(train), len(val), len(test)) == (n_train, 402 - n_train, 101)

    def test_train_count_too_large(self):
        with pytest.raises(ValidationError):
            split(list(range(10)), SplitSpec(10))

    def test_validation_fraction_bounds(self):
        with pytest.raises(ValidationError):
            SplitSpec(10, validation_fraction=0.6)
        with pytest.raises(ValidationError):
            SplitSpec(0)

    @given(
        total=st.integers(min_value=2, max_value=600),
        frac=st.floats(min_value=0.0, max_value=0.5),
        data=st.data(),
    )
    def test_partition_property(self, total, frac, data):
        train_count = data.draw(st.integers(min_value=1, max_value=total - 1))
        samples = list(range(total))
        train, val, test = split(samples, SplitSpec(train_count, frac))
        assert len(train) + len(val) + len(test) == total
        assert train + val + test == samples  # order preserved, no overlap
