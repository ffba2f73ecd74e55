"""Run configuration: one TOML document with a section per subsystem.

CLI flags (--seed, --out) override file values.  Paths inside the file are
resolved relative to the file's directory.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields, replace
from datetime import date
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def load_toml(path) -> dict:
    with open(path, "rb") as handle:
        return tomllib.load(handle)

from .ann import LmParams
from .benchmark import BenchmarkParams, SynthMarketParams
from .cart import CartParams
from .cuckoo import CsParams
from .ensemble import EnsembleParams
from .errors import ValidationError
from .features import FeatureConfig
from .gpr import KernelParams
from .market_data import SplitSpec


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    out_dir: Path = Path("runs")
    manifest: Path | None = None
    synthetic: SynthMarketParams = field(default_factory=SynthMarketParams)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    split: SplitSpec = field(default_factory=lambda: SplitSpec(train_count=402))
    lm: LmParams = field(default_factory=LmParams)
    cart: CartParams = field(default_factory=CartParams)
    kernel: KernelParams = field(default_factory=KernelParams)
    cs: CsParams = field(default_factory=CsParams)
    horizons: tuple[int, ...] = (1, 7)
    pooled_weights: bool = False

    def ensemble_params(self) -> EnsembleParams:
        return EnsembleParams(split=self.split, lm=self.lm, cart=self.cart,
                              kernel=self.kernel, cs=self.cs, seed=self.seed)

    def benchmark_params(self) -> BenchmarkParams:
        return BenchmarkParams(ensemble=self.ensemble_params(),
                               horizons=self.horizons,
                               pooled_weights=self.pooled_weights)


def _build(cls, section: dict, label: str, **coerced):
    known = {f.name for f in fields(cls)}
    unknown = set(section) - known
    if unknown:
        raise ValidationError(f"[{label}] has unknown keys: {sorted(unknown)}")
    return cls(**{**section, **coerced})


def _parse_shocks(raw, label: str):
    shocks = []
    for entry in raw:
        if not isinstance(entry, dict) or set(entry) != {"date", "magnitude"}:
            raise ValidationError(
                f"[{label}] shocks entries need exactly 'date' and 'magnitude'"
            )
        when = entry["date"]
        if isinstance(when, str):
            when = date.fromisoformat(when)
        shocks.append((when, float(entry["magnitude"])))
    return tuple(shocks)


def load_run_config(path=None, seed: int | None = None,
                    out_dir=None) -> RunConfig:
    """Build a RunConfig from an optional TOML file plus CLI overrides."""
    raw: dict = {}
    base = Path.cwd()
    if path is not None:
        path = Path(path)
        raw = load_toml(path)
        base = path.parent

    top_known = {"seed", "out_dir", "data", "features", "split", "ann", "cart",
                 "gpr", "cs", "benchmark"}
    unknown = set(raw) - top_known
    if unknown:
        raise ValidationError(f"config has unknown top-level keys: {sorted(unknown)}")

    run_seed = int(raw.get("seed", 0))
    if seed is not None:
        run_seed = int(seed)

    data = dict(raw.get("data", {}))
    synth_raw = dict(data.pop("synthetic", {}))
    manifest = data.pop("manifest", None)
    if data:
        raise ValidationError(f"[data] has unknown keys: {sorted(data)}")
    if "shocks" in synth_raw:
        synth_raw["shocks"] = _parse_shocks(synth_raw["shocks"], "data.synthetic")
    if "start_date" in synth_raw and isinstance(synth_raw["start_date"], str):
        synth_raw["start_date"] = date.fromisoformat(synth_raw["start_date"])
    synth_raw.setdefault("seed", run_seed)
    synthetic = _build(SynthMarketParams, synth_raw, "data.synthetic")

    bench = dict(raw.get("benchmark", {}))
    horizons = tuple(int(h) for h in bench.pop("horizons", (1, 7)))
    pooled = bool(bench.pop("pooled_weights", False))
    if bench:
        raise ValidationError(f"[benchmark] has unknown keys: {sorted(bench)}")

    cs_raw = dict(raw.get("cs", {}))
    cs_raw.setdefault("seed", run_seed)

    config = RunConfig(
        seed=run_seed,
        out_dir=Path(out_dir) if out_dir is not None else
        (base / raw["out_dir"] if "out_dir" in raw else Path("runs")),
        manifest=(base / manifest) if manifest is not None else None,
        synthetic=synthetic,
        features=_build(FeatureConfig, dict(raw.get("features", {})), "features"),
        split=_build(SplitSpec, dict(raw.get("split", {"train_count": 402})), "split"),
        lm=_build(LmParams, dict(raw.get("ann", {})), "ann"),
        cart=_build(CartParams, dict(raw.get("cart", {})), "cart"),
        kernel=_build(KernelParams, dict(raw.get("gpr", {})), "gpr"),
        cs=_build(CsParams, cs_raw, "cs"),
        horizons=horizons,
        pooled_weights=pooled,
    )
    if seed is not None:
        # A --seed override also reseeds the synthetic generator.
        config = replace(config, synthetic=replace(config.synthetic, seed=run_seed))
    if config.manifest is not None and not config.manifest.exists():
        raise ValidationError(f"panel manifest not found: {config.manifest}")
    return config
