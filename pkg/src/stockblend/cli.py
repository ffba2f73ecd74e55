"""Command-line entry point: gen-data, train, predict, benchmark.

Exit codes: 0 success, 1 usage error, 2 data/validation error,
3 invariant-gate failure.
"""

from __future__ import annotations

import argparse
import sys
from datetime import date
from pathlib import Path

from .benchmark import (
    emit_report,
    generate_synth_market,
    horizon_label,
    run_benchmark,
)
from .config import RunConfig, load_run_config, load_toml
from .ensemble import (
    load_bundle,
    predict_components,
    save_bundle,
    train_ensemble,
)
from .errors import StockblendError, ValidationError
from .features import feature_vector, warmup_index
from .market_data import (
    MarketPanel,
    align,
    derive_sector_index,
    parse_price_csv,
    serialize_price_csv,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_GATE = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems via exit code 1."""

    def error(self, message):
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(
        prog="stockblend",
        description="Weighted-ensemble stock price forecasting "
                    "(ANN + CART + GPR, cuckoo-search weights).",
    )
    parser.add_argument("--config", type=Path, default=None,
                        help="TOML run configuration")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the global seed")
    parser.add_argument("--out", type=Path, default=None,
                        help="override the output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", parents=[],
                         help="write a synthetic panel: company and index "
                              "CSVs plus a manifest")
    gen.set_defaults(func=cmd_gen_data)

    train = sub.add_parser("train", help="train one company's ensemble and "
                                         "write its bundle")
    train.add_argument("--company", required=True, help="company symbol")
    train.set_defaults(func=cmd_train)

    predict = sub.add_parser("predict", help="forecast from a saved bundle")
    predict.add_argument("--bundle", required=True, type=Path,
                         help="path to a .bundle.json file")
    predict.add_argument("--date", required=True,
                         help="anchor date (YYYY-MM-DD), a trading day in the panel")
    predict.set_defaults(func=cmd_predict)

    bench = sub.add_parser("benchmark", help="run the full evaluation and "
                                             "emit report files")
    bench.set_defaults(func=cmd_benchmark)
    return parser


def _config(args) -> RunConfig:
    return load_run_config(path=args.config, seed=args.seed, out_dir=args.out)


def load_panel(config: RunConfig) -> MarketPanel:
    """Aligned panel from the manifest when given, else the synthetic generator."""
    if config.manifest is None:
        return align(generate_synth_market(config.synthetic))
    return _load_manifest_panel(config.manifest)


def _load_manifest_panel(manifest: Path) -> MarketPanel:
    raw = load_toml(manifest)
    base = manifest.parent
    if "market_index" not in raw or "companies" not in raw:
        raise ValidationError(
            f"{manifest}: manifest needs 'market_index' and a [companies] table"
        )

    def read_series(rel_path, symbol):
        path = base / rel_path
        if not path.exists():
            raise ValidationError(f"{manifest}: missing CSV {path}")
        return parse_price_csv(path.read_text(), symbol=symbol)

    market = read_series(raw["market_index"], "MARKET")
    companies = tuple(
        read_series(rel, symbol) for symbol, rel in raw["companies"].items()
    )
    if "sector_index" in raw:
        sector = read_series(raw["sector_index"], "SECTOR")
    else:
        aligned = align(MarketPanel(market, companies[0], companies))
        sector = derive_sector_index(aligned.companies)
        return align(MarketPanel(aligned.market_index, sector, aligned.companies))
    return align(MarketPanel(market, sector, companies))


def cmd_gen_data(args) -> int:
    config = _config(args)
    panel = generate_synth_market(config.synthetic)
    data_dir = config.out_dir / "data"
    data_dir.mkdir(parents=True, exist_ok=True)

    manifest_lines = ['market_index = "market_index.csv"',
                      'sector_index = "sector_index.csv"', "", "[companies]"]
    (data_dir / "market_index.csv").write_text(
        serialize_price_csv(panel.market_index))
    (data_dir / "sector_index.csv").write_text(
        serialize_price_csv(panel.sector_index))
    for company in panel.companies:
        name = f"{company.symbol}.csv"
        (data_dir / name).write_text(serialize_price_csv(company))
        manifest_lines.append(f'{company.symbol} = "{name}"')
    manifest = data_dir / "panel.toml"
    manifest.write_text("\n".join(manifest_lines) + "\n")

    print(f"wrote {len(panel.companies)} company CSVs, 2 index CSVs and "
          f"{manifest}")
    return EXIT_OK


def cmd_train(args) -> int:
    config = _config(args)
    panel = load_panel(config)
    bundle = train_ensemble(panel, args.company, config.features,
                            config.ensemble_params())
    config.out_dir.mkdir(parents=True, exist_ok=True)
    path = save_bundle(bundle, config.out_dir / f"{args.company}.bundle.json")
    w = bundle.weights
    print(f"saved {path}")
    print(f"weights a={w.a:.6f} b={w.b:.6f} c={w.c:.6f}")
    print(f"validation fitness {bundle.provenance['validation_fitness']:.6f}")
    return EXIT_OK


def cmd_predict(args) -> int:
    config = _config(args)
    bundle = load_bundle(args.bundle)
    panel = load_panel(config)
    try:
        anchor = date.fromisoformat(args.date)
    except ValueError:
        raise ValidationError(f"bad date {args.date!r}; expected YYYY-MM-DD") from None

    series = panel.company(bundle.company)
    k = series.index_of(anchor)
    cfg = bundle.feature_config
    if k < warmup_index(cfg):
        raise ValidationError(
            f"{anchor} is inside the warm-up span; the first usable anchor is "
            f"{series.dates[warmup_index(cfg)]} (index {warmup_index(cfg)})"
        )
    vec = feature_vector(panel, bundle.company, k, cfg)
    parts = predict_components(bundle, vec)
    print(f"company={bundle.company} anchor={anchor.isoformat()} "
          f"horizon={cfg.horizon}")
    print(f"predicted={parts['ensemble']:.6f} ann={parts['ann']:.6f} "
          f"cart={parts['cart']:.6f} gpr={parts['gpr']:.6f}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    config = _config(args)
    panel = load_panel(config)
    report = run_benchmark(panel, config.features, config.benchmark_params())
    emit_report(report, config.out_dir)
    print(f"report written under {config.out_dir}")

    for label, models in sorted(report.averages.items()):
        for model in ("ensemble", "ann", "cart", "gpr"):
            m = models[model]
            print(f"{label:>7} {model:>8}: error_rate={m['error_rate']:.6f} "
                  f"mae={m['mae']:.6f} rmse={m['rmse']:.6f}")

    comparison = report.horizon_comparison
    if comparison and not comparison["ensemble_increase_below_worst_learner"]:
        print("warning: ensemble MAE increase across horizons is not below the "
              "worst learner's increase "
              f"({comparison['relative_mae_increase']})")

    failures = [c for c in report.companies if not c.ok]
    for c in failures:
        print(f"FAILED {c.symbol} horizon={horizon_label(c.horizon)}: {c.error}",
              file=sys.stderr)
    if not all(report.gates.values()):
        for message in report.gate_failures:
            print(f"GATE {message}", file=sys.stderr)
        return EXIT_GATE
    if failures:
        return EXIT_DATA
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except StockblendError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
