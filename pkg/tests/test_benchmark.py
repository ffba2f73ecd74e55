import json
from datetime import date

import numpy as np
import pytest
from hypothesis import given, strategies as st

import stockblend.ensemble as ensemble_mod
from stockblend.benchmark import (
    BenchmarkParams,
    SynthMarketParams,
    config_for_horizon,
    emit_report,
    error_rate,
    generate_synth_market,
    mae,
    report_json,
    rmse,
    run_benchmark,
    trading_days,
)
from stockblend.cuckoo import CsResult
from stockblend.ensemble import EnsembleParams, WeightVector
from stockblend.errors import ValidationError
from stockblend.features import FeatureConfig
from stockblend.market_data import SplitSpec, align


class TestMetrics:
    def test_rmse_zero_when_equal(self):
        assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_rmse_constant_residual(self):
        assert rmse([4.0, 5.0], [1.0, 2.0]) == 3.0

    def test_rmse_mixed_fixture(self):
        assert rmse([1.0, 2.0], [2.0, 4.0]) == pytest.approx(np.sqrt(2.5))

    def test_mae_zero_when_equal(self):
        assert mae([3.0], [3.0]) == 0.0

    def test_mae_symmetric_residuals(self):
        assert mae([8.0, 12.0], [10.0, 10.0]) == 2.0

    def test_mae_fixture(self):
        assert mae([10.0, 20.0, 30.0], [11.0, 18.0, 33.0]) == pytest.approx(2.0)

    def test_error_rate_zero_when_equal(self):
        assert error_rate([5.0], [5.0]) == 0.0

    def test_error_rate_proportional(self):
        actual = np.array([50.0, 80.0, 120.0])
        assert error_rate(1.1 * actual, actual) == pytest.approx(0.1)

    def test_error_rate_symmetric(self):
        assert error_rate([110.0, 90.0], [100.0, 100.0]) == pytest.approx(0.1)

    def test_error_rate_rejects_nonpositive_actual(self):
        with pytest.raises(ValidationError):
            error_rate([1.0], [0.0])

    def test_empty_or_mismatched_rejected(self):
        with pytest.raises(ValidationError):
            rmse([], [])
        with pytest.raises(ValidationError):
            mae([1.0], [1.0, 2.0])

    @given(st.lists(
        st.tuples(st.floats(min_value=-1e3, max_value=1e3),
                  st.floats(min_value=1.0, max_value=1e3)),
        min_size=1, max_size=30,
    ))
    def test_rmse_at_least_mae(self, pairs):
        pred = [p for p, _ in pairs]
        actual = [a for _, a in pairs]
        assert rmse(pred, actual) >= mae(pred, actual) >= 0.0


class TestSynthMarket:
    def test_default_shape_and_positivity(self):
        panel = generate_synth_market(SynthMarketParams())
        assert len(panel.companies) == 10
        assert len(panel.market_index) == 503
        for series in (panel.market_index, panel.sector_index, *panel.companies):
            assert len(series) == 503
            assert all(c > 0 for c in series.closes)

    def test_weekday_dates_only(self):
        days = trading_days(date(2020, 1, 1), 30)
        assert len(days) == 30
        assert all(d.weekday() < 5 for d in days)
        panel = generate_synth_market(SynthMarketParams(record_count=40))
        assert all(d.weekday() < 5 for d in panel.market_index.dates)

    def test_full_coupling_no_noise_identical_returns(self):
        params = SynthMarketParams(company_count=4, record_count=60, seed=9,
                                   sector_coupling=1.0,
                                   idiosyncratic_volatility=0.0)
        panel = generate_synth_market(params)
        returns = [np.diff(np.log(c.closes)) for c in panel.companies]
        for other in returns[1:]:
            assert np.allclose(returns[0], other, atol=1e-12)

    def test_deterministic_per_seed(self):
        a = generate_synth_market(SynthMarketParams(seed=4, record_count=50))
        b = generate_synth_market(SynthMarketParams(seed=4, record_count=50))
        assert a.market_index.closes == b.market_index.closes
        assert all(x.closes == y.closes for x, y in zip(a.companies, b.companies))

    def test_sector_index_is_company_mean(self):
        panel = generate_synth_market(SynthMarketParams(company_count=3,
                                                        record_count=30))
        stacked = np.array([c.closes for c in panel.companies])
        assert np.allclose(panel.sector_index.closes, stacked.mean(axis=0))

    def test_shock_hits_every_company(self):
        quiet = SynthMarketParams(company_count=3, record_count=30, seed=2,
                                  idiosyncratic_volatility=0.0)
        days = trading_days(quiet.start_date, 30)
        shocked = SynthMarketParams(company_count=3, record_count=30, seed=2,
                                    idiosyncratic_volatility=0.0,
                                    shocks=((days[10], -0.2),))
        base = generate_synth_market(quiet)
        hit = generate_synth_market(shocked)
        for b, h in zip(base.companies, hit.companies):
            r_base = np.diff(np.log(b.closes))
            r_hit = np.diff(np.log(h.closes))
            delta = r_hit - r_base
            assert delta[9] == pytest.approx(-0.2, abs=1e-12)
            assert np.allclose(np.delete(delta, 9), 0.0, atol=1e-12)

    def test_market_unaffected_by_shocks(self):
        days = trading_days(date(2020, 1, 2), 30)
        a = generate_synth_market(SynthMarketParams(record_count=30, seed=1))
        b = generate_synth_market(SynthMarketParams(record_count=30, seed=1,
                                                    shocks=((days[5], 0.3),)))
        assert a.market_index.closes == b.market_index.closes

    def test_invalid_params(self):
        with pytest.raises(ValidationError):
            SynthMarketParams(market_volatility=-0.1)
        with pytest.raises(ValidationError):
            SynthMarketParams(sector_coupling=1.5)


@pytest.fixture(scope="module")
def bench_setup():
    panel = align(generate_synth_market(
        SynthMarketParams(company_count=3, record_count=220, seed=5)))
    params = BenchmarkParams(
        ensemble=EnsembleParams(split=SplitSpec(train_count=120), seed=9))
    return panel, params


@pytest.fixture(scope="module")
def bench_report(bench_setup):
    panel, params = bench_setup
    return run_benchmark(panel, FeatureConfig(), params)


class TestRunBenchmark:
    def test_shape_contract(self, bench_report):
        assert len(bench_report.companies) == 3 * 2
        for company in bench_report.companies:
            assert company.ok
            assert set(company.test_metrics) == {"ensemble", "ann", "cart", "gpr"}
            for entry in company.test_metrics.values():
                assert set(entry) == {"error_rate", "mae", "rmse"}

    def test_gates_pass(self, bench_report):
        assert bench_report.gates == {"corner_dominance": True,
                                      "metric_identities": True}
        assert bench_report.gate_failures == []

    def test_averages_equal_mean_of_companies(self, bench_report):
        for horizon, label in ((1, "daily"), (7, "weekly")):
            rows = [c for c in bench_report.companies if c.horizon == horizon]
            for model in ("ensemble", "ann", "cart", "gpr"):
                for metric in ("error_rate", "mae", "rmse"):
                    expected = np.mean([c.test_metrics[model][metric] for c in rows])
                    got = bench_report.averages[label][model][metric]
                    assert got == pytest.approx(expected, rel=1e-12)

    def test_weekly_config_switches_lags(self):
        params = BenchmarkParams(ensemble=EnsembleParams(split=SplitSpec(120)))
        weekly = config_for_horizon(FeatureConfig(), 7, params)
        assert (weekly.n, weekly.t, weekly.horizon) == (5, 7, 7)
        daily = config_for_horizon(FeatureConfig(), 1, params)
        assert (daily.n, daily.t, daily.horizon) == (3, 5, 1)

    def test_corner_dominance_invariant(self, bench_report):
        for company in bench_report.companies:
            floor = min(company.validation_rmse[m] for m in ("ann", "cart", "gpr"))
            assert company.validation_rmse["ensemble"] <= floor

    def test_deterministic_report_json(self, bench_setup, bench_report):
        panel, params = bench_setup
        again = run_benchmark(panel, FeatureConfig(), params)
        assert report_json(again) == report_json(bench_report)

    def test_forced_corner_weights_make_ensemble_equal_ann(self, bench_setup,
                                                           monkeypatch):
        panel, params = bench_setup

        def corner_optimizer(outputs, cs_params):
            history = [(1.0, 1.0)]
            result = CsResult(best_solution=np.array([1.0, 0.0, 0.0]),
                              best_fitness=1.0, history=history, evaluations=0)
            return WeightVector(1.0, 0.0, 0.0), result

        monkeypatch.setattr(ensemble_mod, "optimize_weights", corner_optimizer)
        report = run_benchmark(panel, FeatureConfig(),
                               BenchmarkParams(ensemble=params.ensemble,
                                               horizons=(1,)))
        for company in report.companies:
            assert company.predictions["ensemble"] == company.predictions["ann"]
            assert company.test_metrics["ensemble"] == company.test_metrics["ann"]

    def test_broken_learner_marks_company_failed(self, bench_setup, monkeypatch):
        panel, params = bench_setup
        import stockblend.ann as ann_mod

        real = ann_mod.ann_forward_batch

        def broken(model, x):
            return np.full(len(np.atleast_2d(x)), np.nan)

        monkeypatch.setattr(ann_mod, "ann_forward_batch", broken)
        report = run_benchmark(panel, FeatureConfig(),
                               BenchmarkParams(ensemble=params.ensemble,
                                               horizons=(1,)))
        monkeypatch.setattr(ann_mod, "ann_forward_batch", real)
        assert all(not c.ok for c in report.companies)
        assert all("weights" in c.error or "outputs" in c.error
                   for c in report.companies)

    def test_pooled_mode_shares_one_weight_triple(self, bench_setup):
        panel, params = bench_setup
        pooled = run_benchmark(
            panel, FeatureConfig(),
            BenchmarkParams(ensemble=params.ensemble, horizons=(1,),
                            pooled_weights=True),
        )
        triples = {c.weights for c in pooled.companies if c.ok}
        assert len(triples) == 1

    def test_horizon_comparison_fields(self, bench_report):
        comparison = bench_report.horizon_comparison
        assert comparison["short_horizon"] == 1
        assert comparison["long_horizon"] == 7
        assert set(comparison["relative_mae_increase"]) == {
            "ensemble", "ann", "cart", "gpr"}
        assert isinstance(comparison["ensemble_increase_below_worst_learner"], bool)


class TestEmitReport:
    @pytest.fixture()
    def emitted(self, bench_report, tmp_path):
        files = emit_report(bench_report, tmp_path)
        return tmp_path, files

    def test_layout(self, emitted):
        out, files = emitted
        expected = [
            out / "tables" / "error_rate_daily.csv",
            out / "tables" / "mae_daily.csv",
            out / "tables" / "error_rate_weekly.csv",
            out / "tables" / "mae_weekly.csv",
            out / "tables" / "error_rate_summary.csv",
            out / "tables" / "mae_summary.csv",
            out / "plots" / "cs_convergence.csv",
            out / "report.json",
        ]
        for model in ("ensemble", "ann", "cart", "gpr"):
            expected.append(out / "plots" / f"regression_{model}.csv")
            expected.append(out / "plots" / f"residual_hist_{model}.csv")
        for path in expected:
            assert path.exists(), path
        assert set(expected) == set(files)

    def test_table_has_company_rows_plus_average(self, emitted, bench_report):
        out, _ = emitted
        lines = (out / "tables" / "error_rate_daily.csv").read_text().strip().split("\n")
        n_companies = len([c for c in bench_report.companies
                           if c.horizon == 1 and c.ok])
        assert len(lines) == 1 + n_companies + 1
        assert lines[0] == "company,ensemble,gpr,ann,cart"
        assert lines[-1].startswith("AVERAGE,")

    def test_regression_rows_conserve_predictions(self, emitted, bench_report):
        out, _ = emitted
        total = sum(len(c.actual) for c in bench_report.companies if c.ok)
        for model in ("ensemble", "ann", "cart", "gpr"):
            lines = (out / "plots" / f"regression_{model}.csv").read_text().strip().split("\n")
            assert len(lines) - 1 == total

    def test_histogram_counts_conserve_samples(self, emitted, bench_report):
        out, _ = emitted
        total = sum(len(c.actual) for c in bench_report.companies if c.ok)
        for model in ("ensemble", "ann", "cart", "gpr"):
            lines = (out / "plots" / f"residual_hist_{model}.csv").read_text().strip().split("\n")
            counts = [int(line.split(",")[2]) for line in lines[1:]]
            assert len(counts) == 20
            assert sum(counts) == total

    def test_convergence_rows(self, emitted, bench_report):
        out, _ = emitted
        lines = (out / "plots" / "cs_convergence.csv").read_text().strip().split("\n")
        expected = sum(len(c.cs_history) for c in bench_report.companies if c.ok)
        assert len(lines) - 1 == expected

    def test_report_json_parses_and_matches(self, emitted, bench_report):
        out, _ = emitted
        payload = json.loads((out / "report.json").read_text())
        assert payload == bench_report.to_dict()
