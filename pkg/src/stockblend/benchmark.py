"""Metrics, synthetic market generation, and the evaluation protocol.

The benchmark trains one ensemble per company and horizon, scores the
ensemble and each individual learner on the held-out test block, aggregates
company averages, and emits machine-readable tables plus plot data
(regression pairs, residual histograms, optimizer convergence traces).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .ensemble import (
    EnsembleParams,
    LearnerOutputs,
    WeightVector,
    _combined_rmse,
    derive_seed,
    fit_pipeline,
    optimize_weights,
    predict_learner_prices,
)
from .errors import StockblendError, ValidationError
from .features import FeatureConfig
from .market_data import MarketPanel, PriceSeries, derive_sector_index

MODELS = ("ensemble", "ann", "cart", "gpr")
METRICS = ("error_rate", "mae", "rmse")


def rmse(pred, actual) -> float:
    """Root mean squared residual."""
    pred, actual = _paired(pred, actual)
    return float(np.sqrt(np.mean((pred - actual) ** 2)))


def mae(pred, actual) -> float:
    """Mean absolute residual."""
    pred, actual = _paired(pred, actual)
    return float(np.mean(np.abs(pred - actual)))


def error_rate(pred, actual) -> float:
    """Mean of |prediction - actual| / actual; actual prices must be > 0."""
    pred, actual = _paired(pred, actual)
    if np.any(actual <= 0):
        raise ValidationError("error_rate needs strictly positive actual prices")
    return float(np.mean(np.abs(pred - actual) / actual))


def _paired(pred, actual):
    pred = np.asarray(pred, dtype=float).ravel()
    actual = np.asarray(actual, dtype=float).ravel()
    if len(pred) == 0:
        raise ValidationError("metric inputs must be nonempty")
    if pred.shape != actual.shape:
        raise ValidationError(f"length mismatch: {pred.shape} vs {actual.shape}")
    return pred, actual


@dataclass(frozen=True)
class SynthMarketParams:
    """Correlated-sector market generator settings.

    The market index follows a geometric random walk.  A sector-wide return
    factor tracks the market return plus sector-level noise; each company's
    log-return is sector_coupling times that factor, plus idiosyncratic
    noise, plus any scheduled shocks (shared by all companies).  The sector
    index is the equal-weighted mean of the company closes.
    """

    company_count: int = 10
    record_count: int = 503
    seed: int = 0
    market_drift: float = 0.0004
    market_volatility: float = 0.012
    sector_coupling: float = 0.7
    idiosyncratic_volatility: float = 0.008
    shocks: tuple[tuple[date, float], ...] = ()
    start_date: date = date(2020, 1, 2)
    initial_price: float = 100.0

    def __post_init__(self):
        if self.company_count < 1 or self.record_count < 2:
            raise ValidationError("need at least 1 company and 2 records")
        if self.market_volatility < 0 or self.idiosyncratic_volatility < 0:
            raise ValidationError("volatilities must be >= 0")
        if not 0.0 <= self.sector_coupling <= 1.0:
            raise ValidationError("sector_coupling must lie in [0, 1]")
        if not self.initial_price > 0:
            raise ValidationError("initial_price must be positive")


def trading_days(start: date, count: int) -> tuple[date, ...]:
    """``count`` consecutive weekdays starting at the first weekday >= start."""
    days = []
    current = start
    while len(days) < count:
        if current.weekday() < 5:
            days.append(current)
        current += timedelta(days=1)
    return tuple(days)


def generate_synth_market(params: SynthMarketParams) -> MarketPanel:
    """Deterministic synthetic panel: market index, companies, sector index."""
    rng = np.random.default_rng(params.seed)
    dates = trading_days(params.start_date, params.record_count)
    steps = params.record_count - 1

    shock = np.zeros(steps)
    date_pos = {d: i for i, d in enumerate(dates)}
    for when, magnitude in params.shocks:
        pos = date_pos.get(when)
        if pos is not None and pos >= 1:
            shock[pos - 1] += magnitude

    market_returns = params.market_drift + params.market_volatility * rng.standard_normal(steps)
    market_closes = params.initial_price * np.exp(np.concatenate(
        [[0.0], np.cumsum(market_returns)]
    ))
    market = PriceSeries("MARKET", dates, tuple(float(c) for c in market_closes))

    sector_factor = (market_returns
                     + params.market_volatility * rng.standard_normal(steps))

    companies = []
    for i in range(params.company_count):
        noise = params.idiosyncratic_volatility * rng.standard_normal(steps)
        returns = params.sector_coupling * sector_factor + noise + shock
        base = params.initial_price * (0.6 + 0.08 * i)
        closes = base * np.exp(np.concatenate([[0.0], np.cumsum(returns)]))
        companies.append(PriceSeries(
            f"C{i + 1:02d}", dates, tuple(float(c) for c in closes)
        ))

    return MarketPanel(
        market_index=market,
        sector_index=derive_sector_index(companies),
        companies=tuple(companies),
    )


@dataclass(frozen=True)
class BenchmarkParams:
    """Evaluation protocol: horizons to run and the training settings."""

    ensemble: EnsembleParams
    horizons: tuple[int, ...] = (1, 7)
    weekly_n: int = 5
    weekly_t: int = 7
    pooled_weights: bool = False


def config_for_horizon(config: FeatureConfig, horizon: int,
                       params: BenchmarkParams) -> FeatureConfig:
    """Weekly runs switch the lag structure to n=5 weekly-strided closes."""
    if horizon == 7:
        return replace(config, n=params.weekly_n, t=params.weekly_t, horizon=7)
    return replace(config, horizon=horizon)


def horizon_label(horizon: int) -> str:
    return {1: "daily", 7: "weekly"}.get(horizon, f"h{horizon}")


@dataclass
class CompanyResult:
    """Per-company, per-horizon outcome (or a stage-labeled failure)."""

    symbol: str
    horizon: int
    weights: tuple[float, float, float] | None = None
    validation_rmse: dict = field(default_factory=dict)
    test_metrics: dict = field(default_factory=dict)
    test_dates: tuple = ()
    actual: tuple = ()
    predictions: dict = field(default_factory=dict)
    cs_history: tuple = ()
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class EvalReport:
    horizons: tuple[int, ...]
    companies: list[CompanyResult]
    averages: dict
    gates: dict
    gate_failures: list[str]
    horizon_comparison: dict

    def to_dict(self) -> dict:
        return {
            "horizons": list(self.horizons),
            "companies": [
                {
                    "symbol": c.symbol,
                    "horizon": c.horizon,
                    "weights": list(c.weights) if c.weights else None,
                    "validation_rmse": c.validation_rmse,
                    "test_metrics": c.test_metrics,
                    "test_dates": [d for d in c.test_dates],
                    "actual": list(c.actual),
                    "predictions": {m: list(v) for m, v in c.predictions.items()},
                    "cs_history": [list(h) for h in c.cs_history],
                    "error": c.error,
                }
                for c in self.companies
            ],
            "averages": self.averages,
            "gates": self.gates,
            "gate_failures": self.gate_failures,
            "horizon_comparison": self.horizon_comparison,
        }


def _evaluate_company(panel, symbol, config, eparams):
    result = fit_pipeline(panel, symbol, config, eparams)
    bundle = result.bundle
    outputs = result.validation_outputs
    weights = bundle.weights

    validation_rmse = {
        "ensemble": _combined_rmse(weights.as_array(), outputs),
        "ann": rmse(outputs.ann_pred, outputs.actual),
        "cart": rmse(outputs.cart_pred, outputs.actual),
        "gpr": rmse(outputs.gpr_pred, outputs.actual),
    }

    x_test = result.test.feature_matrix()
    actual = result.test.targets()
    ann_p, cart_p, gpr_p = predict_learner_prices(
        bundle, bundle.normalization, x_test
    )
    blended = (weights.a * ann_p + weights.b * cart_p + weights.c * gpr_p) / weights.total
    predictions = {"ensemble": blended, "ann": ann_p, "cart": cart_p, "gpr": gpr_p}

    test_metrics = {
        model: {
            "error_rate": error_rate(pred, actual),
            "mae": mae(pred, actual),
            "rmse": rmse(pred, actual),
        }
        for model, pred in predictions.items()
    }
    return CompanyResult(
        symbol=symbol,
        horizon=config.horizon,
        weights=(weights.a, weights.b, weights.c),
        validation_rmse=validation_rmse,
        test_metrics=test_metrics,
        test_dates=tuple(d.isoformat() for d in result.test.anchor_dates()),
        actual=tuple(float(v) for v in actual),
        predictions={m: tuple(float(v) for v in p) for m, p in predictions.items()},
        cs_history=tuple((float(b), float(m)) for b, m in result.cs_result.history),
        error=None,
    ), result


def _pool_weights(per_company, horizon: int, eparams):
    """Shared weight triple from the concatenated validation outputs."""
    pooled = LearnerOutputs(
        ann_pred=np.concatenate([r.validation_outputs.ann_pred for r in per_company]),
        cart_pred=np.concatenate([r.validation_outputs.cart_pred for r in per_company]),
        gpr_pred=np.concatenate([r.validation_outputs.gpr_pred for r in per_company]),
        actual=np.concatenate([r.validation_outputs.actual for r in per_company]),
    )
    cs = replace(eparams.cs, seed=derive_seed(eparams.seed, horizon, "pooled"))
    weights, cs_result = optimize_weights(pooled, cs)
    return weights, tuple((float(b), float(m)) for b, m in cs_result.history), pooled


def run_benchmark(panel: MarketPanel, config: FeatureConfig,
                  params: BenchmarkParams) -> EvalReport:
    """Train and score every company at every horizon; aggregate averages."""
    companies: list[CompanyResult] = []
    dominance_failures: list[str] = []
    identity_failures: list[str] = []

    for horizon in params.horizons:
        cfg = config_for_horizon(config, horizon, params)
        fitted = []
        for symbol in panel.symbols:
            eparams = replace(
                params.ensemble, seed=derive_seed(params.ensemble.seed, horizon, symbol)
            )
            try:
                company_result, pipeline = _evaluate_company(panel, symbol, cfg, eparams)
            except StockblendError as exc:
                companies.append(CompanyResult(symbol=symbol, horizon=horizon,
                                               error=str(exc)))
                continue
            fitted.append((company_result, pipeline))

        if params.pooled_weights and fitted:
            weights, history, pooled = _pool_weights(
                [p for _, p in fitted], horizon, params.ensemble
            )
            pooled_rmse = _combined_rmse(weights.as_array(), pooled)
            learner_floor = min(
                rmse(pooled.ann_pred, pooled.actual),
                rmse(pooled.cart_pred, pooled.actual),
                rmse(pooled.gpr_pred, pooled.actual),
            )
            if pooled_rmse > learner_floor:
                dominance_failures.append(
                    f"{horizon_label(horizon)}: pooled ensemble validation RMSE "
                    f"{pooled_rmse} above best learner {learner_floor}"
                )
            for company_result, pipeline in fitted:
                _apply_weights(company_result, pipeline, weights, history)

        for company_result, pipeline in fitted:
            companies.append(company_result)
            if not params.pooled_weights:
                ens = company_result.validation_rmse["ensemble"]
                floor = min(company_result.validation_rmse[m]
                            for m in ("ann", "cart", "gpr"))
                if ens > floor:
                    dominance_failures.append(
                        f"{company_result.symbol}/{horizon_label(horizon)}: ensemble "
                        f"validation RMSE {ens} above best learner {floor}"
                    )

    for c in companies:
        if not c.ok:
            continue
        for model, entry in c.test_metrics.items():
            if not (entry["rmse"] >= entry["mae"] >= 0.0
                    and np.isfinite(list(entry.values())).all()):
                identity_failures.append(
                    f"{c.symbol}/{horizon_label(c.horizon)}/{model}: metric identity violated"
                )

    averages = _averages(companies, params.horizons)
    comparison = _horizon_comparison(companies, params.horizons)
    gates = {
        "corner_dominance": not dominance_failures,
        "metric_identities": not identity_failures,
    }
    gate_failures = dominance_failures + identity_failures
    return EvalReport(
        horizons=tuple(params.horizons),
        companies=companies,
        averages=averages,
        gates=gates,
        gate_failures=gate_failures,
        horizon_comparison=comparison,
    )


def _apply_weights(company_result: CompanyResult, pipeline, weights: WeightVector,
                   history: tuple):
    """Re-score a company with externally pooled weights."""
    outputs = pipeline.validation_outputs
    company_result.weights = (weights.a, weights.b, weights.c)
    company_result.validation_rmse["ensemble"] = _combined_rmse(
        weights.as_array(), outputs
    )
    company_result.cs_history = history
    ann_p = np.asarray(company_result.predictions["ann"])
    cart_p = np.asarray(company_result.predictions["cart"])
    gpr_p = np.asarray(company_result.predictions["gpr"])
    blended = (weights.a * ann_p + weights.b * cart_p
               + weights.c * gpr_p) / weights.total
    actual = np.asarray(company_result.actual)
    company_result.predictions["ensemble"] = tuple(float(v) for v in blended)
    company_result.test_metrics["ensemble"] = {
        "error_rate": error_rate(blended, actual),
        "mae": mae(blended, actual),
        "rmse": rmse(blended, actual),
    }


def _averages(companies, horizons) -> dict:
    averages: dict = {}
    for horizon in horizons:
        label = horizon_label(horizon)
        rows = [c for c in companies if c.horizon == horizon and c.ok]
        if not rows:
            continue
        averages[label] = {
            model: {
                metric: float(np.mean([c.test_metrics[model][metric] for c in rows]))
                for metric in METRICS
            }
            for model in MODELS
        }
    return averages


def _horizon_comparison(companies, horizons) -> dict:
    """Relative MAE increase from the shortest to the longest horizon.

    Soft diagnostic: flags whether the ensemble's increase stays below the
    worst individual learner's, averaged over companies present at both
    horizons.
    """
    if len(horizons) < 2:
        return {}
    short, long = min(horizons), max(horizons)
    by_symbol: dict = {}
    for c in companies:
        if c.ok:
            by_symbol.setdefault(c.symbol, {})[c.horizon] = c
    increases: dict = {model: [] for model in MODELS}
    for entries in by_symbol.values():
        if short not in entries or long not in entries:
            continue
        for model in MODELS:
            base = entries[short].test_metrics[model]["mae"]
            far = entries[long].test_metrics[model]["mae"]
            if base > 0:
                increases[model].append((far - base) / base)
    if not increases["ensemble"]:
        return {}
    mean_increase = {m: float(np.mean(v)) for m, v in increases.items()}
    worst_learner = max(mean_increase[m] for m in ("ann", "cart", "gpr"))
    return {
        "short_horizon": short,
        "long_horizon": long,
        "relative_mae_increase": mean_increase,
        "worst_learner_increase": worst_learner,
        "ensemble_increase_below_worst_learner":
            mean_increase["ensemble"] < worst_learner,
    }


def report_json(report: EvalReport) -> str:
    """Deterministic serialization (sorted keys, no timestamps)."""
    return json.dumps(report.to_dict(), indent=2, sort_keys=True)


def emit_report(report: EvalReport, out_dir) -> list[Path]:
    """Write metric tables, plot data files and report.json under out_dir."""
    out = Path(out_dir)
    tables = out / "tables"
    plots = out / "plots"
    tables.mkdir(parents=True, exist_ok=True)
    plots.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(path: Path, lines: list[str]):
        path.write_text("\n".join(lines) + "\n")
        written.append(path)

    # Per-company metric tables, one per (metric, horizon), plus average row.
    table_order = ("ensemble", "gpr", "ann", "cart")
    for horizon in report.horizons:
        label = horizon_label(horizon)
        rows = [c for c in report.companies if c.horizon == horizon and c.ok]
        if not rows:
            continue
        for metric in ("error_rate", "mae"):
            lines = ["company," + ",".join(table_order)]
            for c in rows:
                cells = [repr(c.test_metrics[m][metric]) for m in table_order]
                lines.append(f"{c.symbol}," + ",".join(cells))
            avg = report.averages[label]
            lines.append("AVERAGE," + ",".join(
                repr(avg[m][metric]) for m in table_order
            ))
            emit(tables / f"{metric}_{label}.csv", lines)

    # Horizon summary tables (one row per algorithm).
    labels = [horizon_label(h) for h in report.horizons if horizon_label(h) in report.averages]
    for metric in ("error_rate", "mae"):
        lines = ["algorithm," + ",".join(labels)]
        for model in table_order:
            cells = [repr(report.averages[label][model][metric]) for label in labels]
            lines.append(f"{model}," + ",".join(cells))
        emit(tables / f"{metric}_summary.csv", lines)

    # Predicted-vs-actual pairs and residual histograms, pooled per model.
    for model in MODELS:
        lines = ["company,horizon,anchor_date,actual,predicted"]
        residuals = []
        for c in report.companies:
            if not c.ok:
                continue
            for when, actual, pred in zip(c.test_dates, c.actual,
                                          c.predictions[model]):
                lines.append(f"{c.symbol},{c.horizon},{when},{actual!r},{pred!r}")
                residuals.append(pred - actual)
        emit(plots / f"regression_{model}.csv", lines)

        hist_lines = ["bin_left,bin_right,count"]
        if residuals:
            residuals = np.asarray(residuals)
            extent = float(np.max(np.abs(residuals))) or 1.0
            counts, edges = np.histogram(
                residuals, bins=np.linspace(-extent, extent, 21)
            )
            for left, right, count in zip(edges[:-1], edges[1:], counts):
                hist_lines.append(f"{left!r},{right!r},{int(count)}")
        emit(plots / f"residual_hist_{model}.csv", hist_lines)

    lines = ["company,horizon,iteration,best,mean"]
    for c in report.companies:
        if not c.ok:
            continue
        for iteration, (best, mean) in enumerate(c.cs_history):
            lines.append(f"{c.symbol},{c.horizon},{iteration},{best!r},{mean!r}")
    emit(plots / "cs_convergence.csv", lines)

    report_path = out / "report.json"
    report_path.write_text(report_json(report))
    written.append(report_path)
    return written
