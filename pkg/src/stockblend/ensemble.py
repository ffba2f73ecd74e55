"""Train the three learners, weight them by cuckoo search, serve forecasts.

The combination weight triple <a, b, c> (ANN, CART, GPR) lives in [0,1]^3;
the served forecast is the weighted average (a*W + b*X + c*Y) / (a+b+c).
Weights are fitted once, after learner training, by maximizing
1 / (1 + RMSE) of the combined output on a held-out validation block
(falling back to the training block when the validation fraction is zero).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import ann as ann_mod
from . import cart as cart_mod
from . import gpr as gpr_mod
from .cuckoo import CsParams, CsResult, cs_optimize
from .errors import PipelineError, StockblendError, ValidationError
from .features import (
    FeatureConfig,
    FeatureDataset,
    NormalizationSpec,
    build_dataset,
    fit_normalization,
)
from .market_data import MarketPanel, SplitSpec, split

FORMAT_VERSION = "1.0"
EPSILON_SUM = 1e-6

# Prior mean for GPR on [0,1]-normalized targets: mid-range, so the zero-mean
# prior is exact at the fitted scale.
GPR_TARGET_OFFSET = 0.5

WEIGHT_SEEDS = (
    (1.0, 0.0, 0.0),
    (0.0, 1.0, 0.0),
    (0.0, 0.0, 1.0),
    (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0),
)


@dataclass(frozen=True)
class WeightVector:
    """Combination coefficients for (ANN, CART, GPR), each in [0, 1]."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        for name, value in (("a", self.a), ("b", self.b), ("c", self.c)):
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"weight {name}={value} outside [0, 1]")

    @property
    def total(self) -> float:
        return self.a + self.b + self.c

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c])


@dataclass(frozen=True)
class LearnerOutputs:
    """Per-sample learner predictions and real prices, all in price units."""

    ann_pred: np.ndarray
    cart_pred: np.ndarray
    gpr_pred: np.ndarray
    actual: np.ndarray

    def __post_init__(self):
        n = len(self.actual)
        if not (len(self.ann_pred) == len(self.cart_pred)
                == len(self.gpr_pred) == n):
            raise ValidationError("learner output columns must share one length")
        if n == 0:
            raise ValidationError("learner outputs must be nonempty")


def combine(weights: WeightVector, ann_value: float, cart_value: float,
            gpr_value: float) -> float:
    """Weighted average (a*W + b*X + c*Y) / (a + b + c)."""
    total = weights.total
    if total < EPSILON_SUM:
        raise ValidationError(f"weight sum {total} below {EPSILON_SUM}")
    return (weights.a * ann_value + weights.b * cart_value
            + weights.c * gpr_value) / total


def _combined_rmse(w: np.ndarray, outputs: LearnerOutputs) -> float:
    total = w[0] + w[1] + w[2]
    blended = (w[0] * outputs.ann_pred + w[1] * outputs.cart_pred
               + w[2] * outputs.gpr_pred) / total
    return float(np.sqrt(np.mean((outputs.actual - blended) ** 2)))


def ensemble_fitness(weights, outputs: LearnerOutputs) -> float:
    """1 / (1 + RMSE) of the combined output; degenerate weights score 0."""
    w = weights.as_array() if isinstance(weights, WeightVector) else \
        np.asarray(weights, dtype=float)
    if w[0] + w[1] + w[2] < EPSILON_SUM:
        return 0.0
    return 1.0 / (1.0 + _combined_rmse(w, outputs))


def optimize_weights(outputs: LearnerOutputs,
                     cs_params: CsParams) -> tuple[WeightVector, CsResult]:
    """Cuckoo search over [0,1]^3, seeded with the three corner vectors and
    the uniform vector so the result never scores below any single learner."""
    result = cs_optimize(
        lambda w: ensemble_fitness(w, outputs),
        dim=3,
        bounds=(0.0, 1.0),
        params=cs_params,
        seeds=[np.array(s) for s in WEIGHT_SEEDS],
    )
    best = result.best_solution
    return WeightVector(float(best[0]), float(best[1]), float(best[2])), result


@dataclass(frozen=True)
class EnsembleParams:
    """Everything train_ensemble needs besides the feature config."""

    split: SplitSpec
    lm: ann_mod.LmParams = field(default_factory=ann_mod.LmParams)
    cart: cart_mod.CartParams = field(default_factory=cart_mod.CartParams)
    kernel: gpr_mod.KernelParams = field(default_factory=gpr_mod.KernelParams)
    cs: CsParams = field(default_factory=CsParams)
    seed: int = 0


@dataclass
class EnsembleBundle:
    """Persisted artifact: config, normalization, learners, weights."""

    company: str
    feature_config: FeatureConfig
    normalization: NormalizationSpec
    ann_model: ann_mod.AnnModel
    cart_model: cart_mod.CartModel
    gpr_model: gpr_mod.GprModel
    weights: WeightVector
    provenance: dict


@dataclass
class PipelineResult:
    """Bundle plus the intermediate artifacts the benchmark reuses."""

    bundle: EnsembleBundle
    train: FeatureDataset
    validation: FeatureDataset
    test: FeatureDataset
    validation_outputs: LearnerOutputs
    cs_result: CsResult


def derive_seed(*parts) -> int:
    """Stable child seed from a mix of ints and strings."""
    entropy = []
    for part in parts:
        if isinstance(part, str):
            digest = hashlib.sha256(part.encode()).digest()
            entropy.append(int.from_bytes(digest[:8], "big"))
        else:
            entropy.append(int(part))
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def panel_fingerprint(panel: MarketPanel) -> str:
    """Content hash of every series in the panel (symbol, dates, closes)."""
    digest = hashlib.sha256()
    for series in (panel.market_index, panel.sector_index, *panel.companies):
        digest.update(series.symbol.encode())
        for d, c in zip(series.dates, series.closes):
            digest.update(d.isoformat().encode())
            digest.update(repr(c).encode())
    return digest.hexdigest()


def predict_learner_prices(bundle_or_models, normalization: NormalizationSpec,
                           features: np.ndarray):
    """Denormalized per-learner price predictions for raw feature rows."""
    if isinstance(bundle_or_models, EnsembleBundle):
        models = (bundle_or_models.ann_model, bundle_or_models.cart_model,
                  bundle_or_models.gpr_model)
    else:
        models = bundle_or_models
    ann_model, cart_model, gpr_model = models
    x = normalization.apply_features(np.atleast_2d(features))
    ann_norm = ann_mod.ann_forward_batch(ann_model, x)
    cart_norm = np.array([cart_mod.cart_predict(cart_model, row) for row in x])
    gpr_norm, _ = gpr_mod.gpr_predict_batch(gpr_model, x)
    return (
        normalization.invert_target(ann_norm),
        normalization.invert_target(cart_norm),
        normalization.invert_target(gpr_norm),
    )


def fit_pipeline(panel: MarketPanel, company: str, config: FeatureConfig,
                 params: EnsembleParams) -> PipelineResult:
    """Full training pipeline; stage failures surface as PipelineError."""

    def stage(label, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except StockblendError as exc:
            raise PipelineError(label, exc) from exc

    dataset = stage("features", build_dataset, panel, company, config)
    train, validation, test = stage("split", split, dataset, params.split)
    normalization = stage("normalization", fit_normalization, train)

    x_train = normalization.apply_features(train.feature_matrix())
    y_train = normalization.apply_target(train.targets())

    def train_ann():
        model = ann_mod.ann_init(x_train.shape[1], derive_seed(params.seed, "ann"))
        trained, _ = ann_mod.ann_train_lm(model, x_train, y_train, params.lm)
        return trained

    def train_cart():
        grown = cart_mod.cart_grow(x_train, y_train, params.cart)
        return cart_mod.cart_prune(grown, x_train, y_train, params.cart)

    def train_gpr():
        fit = gpr_mod.gpr_fit_grid if params.kernel.grid_search else gpr_mod.gpr_fit
        return fit(x_train, y_train, params.kernel, mean_offset=GPR_TARGET_OFFSET)

    ann_model = stage("ann", train_ann)
    cart_model = stage("cart", train_cart)
    gpr_model = stage("gpr", train_gpr)

    holdout = validation if len(validation) > 0 else train

    def compute_outputs():
        ann_p, cart_p, gpr_p = predict_learner_prices(
            (ann_model, cart_model, gpr_model), normalization,
            holdout.feature_matrix(),
        )
        return LearnerOutputs(ann_p, cart_p, gpr_p, holdout.targets())

    outputs = stage("outputs", compute_outputs)
    cs_params = CsParams(
        nest_count=params.cs.nest_count,
        pa=params.cs.pa,
        max_iters=params.cs.max_iters,
        levy_beta=params.cs.levy_beta,
        step_scale=params.cs.step_scale,
        seed=derive_seed(params.seed, "weights"),
    )
    weights, cs_result = stage("weights", optimize_weights, outputs, cs_params)

    bundle = EnsembleBundle(
        company=company,
        feature_config=config,
        normalization=normalization,
        ann_model=ann_model,
        cart_model=cart_model,
        gpr_model=gpr_model,
        weights=weights,
        provenance={
            "seed": params.seed,
            "data_fingerprint": panel_fingerprint(panel),
            "created_at": datetime.now(timezone.utc).isoformat(),
            "validation_fitness": cs_result.best_fitness,
        },
    )
    return PipelineResult(bundle, train, validation, test, outputs, cs_result)


def train_ensemble(panel: MarketPanel, company: str, config: FeatureConfig,
                   params: EnsembleParams) -> EnsembleBundle:
    """Train everything and return the persistable bundle."""
    return fit_pipeline(panel, company, config, params).bundle


def predict_components(bundle: EnsembleBundle, features) -> dict[str, float]:
    """Ensemble forecast plus the three denormalized learner forecasts."""
    features = np.asarray(features, dtype=float)
    expected = len(bundle.normalization.feature_min)
    if features.shape != (expected,):
        raise ValidationError(
            f"feature vector has shape {features.shape}, expected ({expected},)"
        )
    ann_p, cart_p, gpr_p = predict_learner_prices(bundle, bundle.normalization,
                                                  features)
    blended = combine(bundle.weights, float(ann_p[0]), float(cart_p[0]),
                      float(gpr_p[0]))
    return {
        "ensemble": blended,
        "ann": float(ann_p[0]),
        "cart": float(cart_p[0]),
        "gpr": float(gpr_p[0]),
    }


def ensemble_predict(bundle: EnsembleBundle, sample) -> float:
    """Forecast price for one feature sample (or raw feature vector)."""
    features = getattr(sample, "features", sample)
    return predict_components(bundle, features)["ensemble"]


def bundle_to_dict(bundle: EnsembleBundle) -> dict:
    gpr_model = bundle.gpr_model
    return {
        "format_version": FORMAT_VERSION,
        "company": bundle.company,
        "feature_config": asdict(bundle.feature_config),
        "normalization": asdict(bundle.normalization),
        "ann": {
            "w1": bundle.ann_model.w1.tolist(),
            "b1": bundle.ann_model.b1.tolist(),
            "w2": bundle.ann_model.w2.tolist(),
            "b2": bundle.ann_model.b2.tolist(),
            "w3": bundle.ann_model.w3.tolist(),
            "b3": bundle.ann_model.b3,
            "input_dim": bundle.ann_model.input_dim,
            "rng_seed": bundle.ann_model.rng_seed,
        },
        "cart": {
            "n_features": bundle.cart_model.n_features,
            "root": bundle.cart_model.root.to_dict(),
        },
        "gpr": {
            "params": {
                "length_scale": gpr_model.params.length_scale,
                "signal_variance": gpr_model.params.signal_variance,
                "noise_variance": gpr_model.params.noise_variance,
                "grid_search": gpr_model.params.grid_search,
            },
            "mean_offset": gpr_model.mean_offset,
            "x": gpr_model.x.tolist(),
            "y": gpr_model.y.tolist(),
            "alpha": gpr_model.alpha.tolist(),
        },
        "weights": {"a": bundle.weights.a, "b": bundle.weights.b,
                    "c": bundle.weights.c},
        "provenance": bundle.provenance,
    }


def bundle_from_dict(payload: dict) -> EnsembleBundle:
    version = str(payload.get("format_version", ""))
    major = version.split(".", 1)[0]
    if major != FORMAT_VERSION.split(".", 1)[0]:
        raise ValidationError(
            f"unsupported bundle format_version {version!r}; "
            f"this build reads {FORMAT_VERSION}"
        )
    norm = payload["normalization"]
    normalization = NormalizationSpec(
        feature_min=tuple(norm["feature_min"]),
        feature_max=tuple(norm["feature_max"]),
        target_min=norm["target_min"],
        target_max=norm["target_max"],
    )
    a = payload["ann"]
    ann_model = ann_mod.AnnModel(
        w1=np.array(a["w1"]), b1=np.array(a["b1"]),
        w2=np.array(a["w2"]), b2=np.array(a["b2"]),
        w3=np.array(a["w3"]), b3=float(a["b3"]),
        input_dim=int(a["input_dim"]), rng_seed=int(a["rng_seed"]),
    )
    cart_model = cart_mod.CartModel(
        root=cart_mod.TreeNode.from_dict(payload["cart"]["root"]),
        n_features=int(payload["cart"]["n_features"]),
    )
    g = payload["gpr"]
    kernel = gpr_mod.KernelParams(**g["params"])
    # The factorization is rebuilt from the stored inputs; the stored alpha
    # vector is kept verbatim so the posterior mean round-trips exactly.
    refit = gpr_mod.gpr_fit(np.array(g["x"]), np.array(g["y"]), kernel,
                            mean_offset=float(g["mean_offset"]))
    refit.alpha = np.array(g["alpha"])
    weights = WeightVector(**payload["weights"])
    return EnsembleBundle(
        company=payload["company"],
        feature_config=FeatureConfig(**payload["feature_config"]),
        normalization=normalization,
        ann_model=ann_model,
        cart_model=cart_model,
        gpr_model=refit,
        weights=weights,
        provenance=dict(payload["provenance"]),
    )


def save_bundle(bundle: EnsembleBundle, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(bundle_to_dict(bundle), indent=2, sort_keys=True))
    return path


def load_bundle(path) -> EnsembleBundle:
    return bundle_from_dict(json.loads(Path(path).read_text()))
