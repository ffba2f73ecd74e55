"""Weighted-ensemble stock price forecasting.

Builds technical-indicator feature vectors from daily closing prices, trains
three regressors (a two-hidden-layer network, a pruned regression tree and a
Gaussian process), fits their combination weights with cuckoo search and
serves the weighted-average forecast.
"""

from .ann import AnnModel, LmParams, ann_forward, ann_init, ann_train_lm
from .benchmark import (
    BenchmarkParams,
    EvalReport,
    SynthMarketParams,
    emit_report,
    error_rate,
    generate_synth_market,
    mae,
    rmse,
    run_benchmark,
)
from .cart import CartModel, CartParams, cart_grow, cart_predict, cart_prune, gini_impurity
from .config import RunConfig, load_run_config
from .cuckoo import CsParams, CsResult, cs_optimize, cs_seed_population, levy_step
from .ensemble import (
    EnsembleBundle,
    EnsembleParams,
    LearnerOutputs,
    WeightVector,
    combine,
    ensemble_fitness,
    ensemble_predict,
    load_bundle,
    optimize_weights,
    save_bundle,
    train_ensemble,
)
from .errors import StockblendError
from .features import (
    FeatureConfig,
    FeatureDataset,
    FeatureSample,
    NormalizationSpec,
    build_dataset,
    build_sample,
    ema,
    fit_normalization,
    macd,
    rsi,
    sector_stats,
    window_covariance,
)
from .gpr import (
    GprModel,
    KernelParams,
    gpr_fit,
    gpr_log_marginal_likelihood,
    gpr_predict,
)
from .market_data import (
    MarketPanel,
    PriceSeries,
    SplitSpec,
    align,
    derive_sector_index,
    parse_price_csv,
    serialize_price_csv,
    split,
)

__version__ = "0.1.0"
