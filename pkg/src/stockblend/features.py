"""Technical-indicator features and sliding-window sample construction.

Each sample anchored at trading-day index k carries, in fixed order:

    [corr_market, corr_sector, market_index_mean, sector_price_mean,
     sector_price_std, macd, rsi, lag_{n*t}, ..., lag_t, lag_0]

followed by the forecast target, the close at k + horizon.  All feature
inputs come from indices <= k; the target is the only forward-looking value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date

import numpy as np

from .errors import InsufficientHistoryError, ValidationError
from .market_data import MarketPanel

__all__ = [
    "FeatureConfig",
    "FeatureSample",
    "FeatureDataset",
    "NormalizationSpec",
    "ema",
    "macd",
    "rsi",
    "window_covariance",
    "pearson_correlation",
    "sector_stats",
    "warmup_index",
    "feature_names",
    "feature_vector",
    "build_sample",
    "build_dataset",
    "fit_normalization",
]


@dataclass(frozen=True)
class FeatureConfig:
    """Window sizes for indicators and the lag structure of the input vector.

    ``n`` lagged closes at stride ``t`` trading days precede the anchor;
    ``horizon`` is the forecast offset (1 = next day, 7 = next week).
    """

    n: int = 3
    t: int = 5
    horizon: int = 1
    corr_window: int = 14
    index_window: int = 7
    sector_window: int = 14
    macd_short: int = 13
    macd_long: int = 26
    rsi_window: int = 14
    normalized_correlation: bool = False

    def __post_init__(self):
        if self.n < 1 or self.t < 1 or self.horizon < 1:
            raise ValidationError("n, t and horizon must all be >= 1")
        if self.macd_short >= self.macd_long:
            raise ValidationError(
                f"macd_short {self.macd_short} must be < macd_long {self.macd_long}"
            )
        for name in ("corr_window", "index_window", "sector_window", "rsi_window"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")


@dataclass(frozen=True)
class FeatureSample:
    """One input vector plus its forecast target and anchor date."""

    features: tuple[float, ...]
    target: float
    anchor_date: date

    def __post_init__(self):
        if not self.target > 0:
            raise ValidationError(f"target must be positive, got {self.target}")


class FeatureDataset:
    """Chronologically ordered feature samples for one company."""

    def __init__(self, samples, names):
        self.samples = tuple(samples)
        self.names = tuple(names)
        for s in self.samples:
            if len(s.features) != len(self.names):
                raise ValidationError(
                    f"sample at {s.anchor_date} has {len(s.features)} features, "
                    f"expected {len(self.names)}"
                )

    def __len__(self):
        return len(self.samples)

    def __getitem__(self, key):
        if isinstance(key, slice):
            return FeatureDataset(self.samples[key], self.names)
        return self.samples[key]

    def __iter__(self):
        return iter(self.samples)

    def feature_matrix(self) -> np.ndarray:
        return np.array([s.features for s in self.samples], dtype=float)

    def targets(self) -> np.ndarray:
        return np.array([s.target for s in self.samples], dtype=float)

    def anchor_dates(self) -> tuple[date, ...]:
        return tuple(s.anchor_date for s in self.samples)

    def to_csv(self) -> str:
        lines = ["anchor_date," + ",".join(self.names) + ",target"]
        for s in self.samples:
            cells = [s.anchor_date.isoformat()]
            cells.extend(repr(v) for v in s.features)
            cells.append(repr(s.target))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def ema(closes, window: int) -> np.ndarray:
    """Exponential moving average with alpha = 2/(window+1).

    Seeded with the simple mean of the first ``window`` values; the returned
    array covers indices window-1 .. len-1 of the input.
    """
    closes = np.asarray(closes, dtype=float)
    if window < 1:
        raise ValidationError(f"window must be >= 1, got {window}")
    if len(closes) < window:
        raise InsufficientHistoryError(
            f"need at least {window} closes for EMA, got {len(closes)}"
        )
    alpha = 2.0 / (window + 1.0)
    out = np.empty(len(closes) - window + 1)
    out[0] = closes[:window].mean()
    for i in range(1, len(out)):
        out[i] = alpha * closes[window - 1 + i] + (1.0 - alpha) * out[i - 1]
    return out


def macd(closes, short: int = 13, long: int = 26) -> float:
    """Momentum indicator: short EMA minus long EMA at the last index."""
    closes = np.asarray(closes, dtype=float)
    if len(closes) < long:
        raise InsufficientHistoryError(
            f"need at least {long} closes for MACD, got {len(closes)}"
        )
    return float(ema(closes, short)[-1] - ema(closes, long)[-1])


def rsi(closes, window: int = 14) -> float:
    """Relative strength index over exactly ``window`` day-over-day changes.

    Counts up-days against down-days; flat days count toward neither.
    All-up -> 100, all-down -> 0, all-flat -> 50 (continuous limits).
    """
    closes = np.asarray(closes, dtype=float)
    if len(closes) != window + 1:
        raise ValidationError(
            f"RSI needs exactly {window + 1} closes, got {len(closes)}"
        )
    changes = np.diff(closes)
    gains = int(np.sum(changes > 0))
    losses = int(np.sum(changes < 0))
    if gains == 0 and losses == 0:
        return 50.0
    if losses == 0:
        return 100.0
    rs = gains / losses
    return 100.0 - 100.0 / (1.0 + rs)


def window_covariance(x, y) -> float:
    """Co-movement of two equal-length windows: sum((x-mx)(y-my)) / (len-1).

    This is a sample covariance, deliberately not normalized to [-1, 1].
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValidationError(f"window length mismatch: {x.shape} vs {y.shape}")
    if len(x) < 2:
        raise ValidationError("windows must hold at least 2 points")
    return float(np.sum((x - x.mean()) * (y - y.mean())) / (len(x) - 1))


def pearson_correlation(x, y) -> float:
    """Normalized variant of :func:`window_covariance`; 0 when either window
    is constant."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    cov = window_covariance(x, y)
    sx = math.sqrt(np.sum((x - x.mean()) ** 2) / (len(x) - 1))
    sy = math.sqrt(np.sum((y - y.mean()) ** 2) / (len(y) - 1))
    if sx == 0.0 or sy == 0.0:
        return 0.0
    return cov / (sx * sy)


def sector_stats(panel: MarketPanel, at: int, window: int) -> tuple[float, float]:
    """Pooled mean and population std of all sector companies' closes over
    the trailing ``window`` days ending at index ``at``."""
    if at - window + 1 < 0:
        raise InsufficientHistoryError(
            f"index {at} has fewer than {window} days of history"
        )
    pooled = np.concatenate(
        [np.asarray(c.closes[at - window + 1: at + 1], dtype=float)
         for c in panel.companies]
    )
    return float(pooled.mean()), float(pooled.std())


def warmup_index(config: FeatureConfig) -> int:
    """First anchor index with full history for every feature."""
    return max(
        config.n * config.t,
        config.macd_long - 1,
        config.corr_window - 1,
        config.index_window - 1,
        config.sector_window - 1,
        config.rsi_window,
    )


def feature_names(config: FeatureConfig) -> tuple[str, ...]:
    names = [
        "corr_market",
        "corr_sector",
        "market_index_mean",
        "sector_price_mean",
        "sector_price_std",
        "macd",
        "rsi",
    ]
    names.extend(f"lag_{offset * config.t}" for offset in range(config.n, -1, -1))
    return tuple(names)


def feature_vector(panel: MarketPanel, company: str, k: int,
                   config: FeatureConfig) -> np.ndarray:
    """Assemble the input vector anchored at index ``k`` (no target).

    Raises InsufficientHistoryError below the warm-up index.
    """
    if not panel.is_aligned():
        raise ValidationError("panel must be aligned before feature construction")
    series = panel.company(company)
    if k < warmup_index(config):
        raise InsufficientHistoryError(
            f"anchor {k} is before warm-up index {warmup_index(config)}"
        )
    if k >= len(series):
        raise ValidationError(f"anchor {k} beyond series length {len(series)}")

    closes = np.asarray(series.closes, dtype=float)
    corr = pearson_correlation if config.normalized_correlation else window_covariance
    lo = k - config.corr_window + 1
    window = closes[lo: k + 1]
    market = np.asarray(panel.market_index.closes[lo: k + 1], dtype=float)
    sector = np.asarray(panel.sector_index.closes[lo: k + 1], dtype=float)
    corr_market = corr(window, market)
    corr_sector = corr(window, sector)

    index_mean = float(
        np.mean(panel.market_index.closes[k - config.index_window + 1: k + 1])
    )
    sector_mean, sector_std = sector_stats(panel, k, config.sector_window)
    m = macd(closes[: k + 1], config.macd_short, config.macd_long)
    r = rsi(closes[k - config.rsi_window: k + 1], config.rsi_window)

    lags = [closes[k - offset * config.t] for offset in range(config.n, -1, -1)]
    return np.array(
        [corr_market, corr_sector, index_mean, sector_mean, sector_std, m, r, *lags]
    )


def build_sample(panel: MarketPanel, company: str, k: int,
                 config: FeatureConfig) -> FeatureSample | None:
    """Feature vector plus target at k + horizon, or None when the anchor is
    inadmissible (warm-up not reached, or target beyond the series)."""
    series = panel.company(company)
    if k < warmup_index(config) or k + config.horizon >= len(series):
        return None
    vec = feature_vector(panel, company, k, config)
    return FeatureSample(
        features=tuple(float(v) for v in vec),
        target=float(series.closes[k + config.horizon]),
        anchor_date=series.dates[k],
    )


def build_dataset(panel: MarketPanel, company: str,
                  config: FeatureConfig) -> FeatureDataset:
    """One sample per admissible anchor index, in chronological order."""
    series = panel.company(company)
    samples = []
    for k in range(warmup_index(config), len(series) - config.horizon):
        sample = build_sample(panel, company, k, config)
        if sample is not None:
            samples.append(sample)
    if not samples:
        raise InsufficientHistoryError(
            f"{company}: series of length {len(series)} admits no samples "
            f"(warm-up {warmup_index(config)}, horizon {config.horizon})"
        )
    return FeatureDataset(samples, feature_names(config))


@dataclass(frozen=True)
class NormalizationSpec:
    """Min-max ranges learned from training data; maps features and target
    into [0, 1], clamping out-of-range values."""

    feature_min: tuple[float, ...]
    feature_max: tuple[float, ...]
    target_min: float
    target_max: float

    def apply_features(self, x: np.ndarray) -> np.ndarray:
        """Normalize a feature vector or matrix (last axis = features)."""
        x = np.asarray(x, dtype=float)
        lo = np.asarray(self.feature_min)
        hi = np.asarray(self.feature_max)
        span = hi - lo
        out = np.where(span > 0, (x - lo) / np.where(span > 0, span, 1.0), 0.5)
        return np.clip(out, 0.0, 1.0)

    def apply_target(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.target_max > self.target_min:
            scaled = (y - self.target_min) / (self.target_max - self.target_min)
        else:
            scaled = np.full_like(y, 0.5)
        return np.clip(scaled, 0.0, 1.0)

    def invert_target(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return self.target_min + y * (self.target_max - self.target_min)


def fit_normalization(train: FeatureDataset) -> NormalizationSpec:
    """Learn min-max ranges from the training block only."""
    if len(train) == 0:
        raise ValidationError("cannot fit normalization on an empty dataset")
    features = train.feature_matrix()
    targets = train.targets()
    return NormalizationSpec(
        feature_min=tuple(float(v) for v in features.min(axis=0)),
        feature_max=tuple(float(v) for v in features.max(axis=0)),
        target_min=float(targets.min()),
        target_max=float(targets.max()),
    )
