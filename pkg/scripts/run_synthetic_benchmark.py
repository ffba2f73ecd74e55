#!/usr/bin/env python3
"""Run the full evaluation protocol on a synthetic market and print the
per-company metric tables plus the daily-vs-weekly summary.

Example:
    python scripts/run_synthetic_benchmark.py --seed 42 --out runs/demo
"""

import argparse
import sys
import time
from pathlib import Path

from stockblend.benchmark import (
    BenchmarkParams,
    SynthMarketParams,
    emit_report,
    generate_synth_market,
    horizon_label,
    run_benchmark,
)
from stockblend.ensemble import EnsembleParams
from stockblend.features import FeatureConfig
from stockblend.market_data import SplitSpec, align


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--companies", type=int, default=10)
    parser.add_argument("--records", type=int, default=503)
    parser.add_argument("--train-count", type=int, default=402)
    parser.add_argument("--out", type=Path, default=None,
                        help="also write the report files here")
    args = parser.parse_args()

    panel = align(generate_synth_market(SynthMarketParams(
        company_count=args.companies, record_count=args.records,
        seed=args.seed)))
    params = BenchmarkParams(ensemble=EnsembleParams(
        split=SplitSpec(train_count=args.train_count), seed=args.seed))

    start = time.perf_counter()
    report = run_benchmark(panel, FeatureConfig(), params)
    elapsed = time.perf_counter() - start

    order = ("ensemble", "gpr", "ann", "cart")
    for horizon in report.horizons:
        label = horizon_label(horizon)
        rows = [c for c in report.companies if c.horizon == horizon and c.ok]
        if not rows:
            continue
        print(f"\n== error rate, {label} ==")
        print(f"{'company':>8} " + " ".join(f"{m:>10}" for m in order))
        for c in rows:
            cells = " ".join(f"{c.test_metrics[m]['error_rate']:>10.4f}"
                             for m in order)
            print(f"{c.symbol:>8} {cells}")
        avg = report.averages[label]
        print(f"{'AVERAGE':>8} " + " ".join(
            f"{avg[m]['error_rate']:>10.4f}" for m in order))

    print("\n== MAE summary ==")
    labels = [horizon_label(h) for h in report.horizons]
    print(f"{'model':>10} " + " ".join(f"{l:>10}" for l in labels))
    for model in order:
        cells = " ".join(f"{report.averages[l][model]['mae']:>10.4f}"
                         for l in labels)
        print(f"{model:>10} {cells}")

    comparison = report.horizon_comparison
    if comparison:
        print("\nrelative MAE increase daily -> weekly:")
        for model, value in comparison["relative_mae_increase"].items():
            print(f"  {model:>10}: {value:+.3f}")

    failures = [c for c in report.companies if not c.ok]
    for c in failures:
        print(f"FAILED {c.symbol}/{horizon_label(c.horizon)}: {c.error}",
              file=sys.stderr)
    print(f"\ngates: {report.gates}  elapsed: {elapsed:.1f}s")

    if args.out is not None:
        emit_report(report, args.out)
        print(f"report files written under {args.out}")
    return 0 if all(report.gates.values()) and not failures else 1


if __name__ == "__main__":
    sys.exit(main())
