from datetime import date, timedelta

import pytest

from stockblend.benchmark import SynthMarketParams, generate_synth_market
from stockblend.ensemble import EnsembleParams, fit_pipeline
from stockblend.features import FeatureConfig
from stockblend.market_data import MarketPanel, PriceSeries, SplitSpec, align


def make_series(symbol, closes, start=date(2021, 1, 4)):
    """PriceSeries over consecutive weekdays starting at ``start``."""
    dates = []
    current = start
    while len(dates) < len(closes):
        if current.weekday() < 5:
            dates.append(current)
        current += timedelta(days=1)
    return PriceSeries(symbol, tuple(dates), tuple(float(c) for c in closes))


@pytest.fixture(scope="session")
def small_panel():
    params = SynthMarketParams(company_count=3, record_count=220, seed=5)
    return align(generate_synth_market(params))


@pytest.fixture(scope="session")
def small_pipeline(small_panel):
    params = EnsembleParams(split=SplitSpec(train_count=120), seed=9)
    return fit_pipeline(small_panel, "C01", FeatureConfig(), params)
