"""Exact Gaussian-process regression with a squared-exponential kernel.

The prior mean is zero (optionally shifted by a constant offset handled
outside the linear algebra); the posterior mean and variance come from a
Cholesky factorization of K + noise * I, with jitter escalation when the
matrix is numerically indefinite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GprFitError, ValidationError

_JITTER_START = 1e-10
_JITTER_MAX = 1e-4


@dataclass(frozen=True)
class KernelParams:
    """Squared-exponential kernel hyperparameters (normalized feature space)."""

    length_scale: float = 1.0
    signal_variance: float = 1.0
    noise_variance: float = 0.01
    grid_search: bool = False

    def __post_init__(self):
        for name in ("length_scale", "signal_variance", "noise_variance"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be strictly positive")


# Coarse evidence-maximization grids used when grid_search is enabled.
LENGTH_SCALE_GRID = (0.25, 0.5, 1.0, 2.0, 4.0)
NOISE_GRID = (1e-4, 1e-3, 1e-2, 1e-1)


@dataclass
class GprModel:
    """Training data, kernel, Cholesky factor and precomputed weights."""

    x: np.ndarray
    y: np.ndarray
    params: KernelParams
    mean_offset: float
    chol: np.ndarray
    alpha: np.ndarray


def _sq_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aa = np.sum(a ** 2, axis=1)[:, None]
    bb = np.sum(b ** 2, axis=1)[None, :]
    return np.maximum(aa + bb - 2.0 * (a @ b.T), 0.0)


def kernel_matrix(a: np.ndarray, b: np.ndarray, params: KernelParams) -> np.ndarray:
    """k(x, x') = signal_variance * exp(-||x - x'||^2 / (2 * length_scale^2))."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    return params.signal_variance * np.exp(
        -_sq_distances(a, b) / (2.0 * params.length_scale ** 2)
    )


def gpr_fit(x: np.ndarray, y: np.ndarray, params: KernelParams,
            mean_offset: float = 0.0) -> GprModel:
    """Factorize K + noise*I and solve for the weight vector alpha.

    ``mean_offset`` is subtracted from the targets before the solve and added
    back at prediction, so the prior mean is exactly zero at the fitted scale.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if len(y) == 0:
        raise ValidationError("training set must be nonempty")
    if x.shape[0] != len(y):
        raise ValidationError(f"{x.shape[0]} inputs vs {len(y)} targets")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValidationError("training data must be finite")

    k = kernel_matrix(x, x, params)
    k[np.diag_indices_from(k)] += params.noise_variance

    jitter = 0.0
    while True:
        try:
            chol = np.linalg.cholesky(
                k if jitter == 0.0 else k + jitter * np.eye(len(y))
            )
            break
        except np.linalg.LinAlgError:
            jitter = _JITTER_START if jitter == 0.0 else jitter * 10.0
            if jitter > _JITTER_MAX:
                raise GprFitError(
                    "covariance factorization failed; increase noise_variance"
                ) from None

    centered = y - mean_offset
    alpha = np.linalg.solve(chol.T, np.linalg.solve(chol, centered))
    return GprModel(x=x, y=y.copy(), params=params, mean_offset=mean_offset,
                    chol=chol, alpha=alpha)


def _predict_batch(model: GprModel, x: np.ndarray):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    k_star = kernel_matrix(model.x, x, model.params)      # (n_train, n_test)
    mean = k_star.T @ model.alpha + model.mean_offset
    v = np.linalg.solve(model.chol, k_star)
    var = model.params.signal_variance - np.sum(v ** 2, axis=0)
    return mean, np.maximum(var, 0.0)


def gpr_predict(model: GprModel, x) -> tuple[float, float]:
    """Posterior mean and (non-negative) variance at a single input."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.x.shape[1],):
        raise ValidationError(
            f"input has shape {x.shape}, expected ({model.x.shape[1]},)"
        )
    mean, var = _predict_batch(model, x[None, :])
    return float(mean[0]), float(var[0])


def gpr_predict_batch(model: GprModel, x) -> tuple[np.ndarray, np.ndarray]:
    """Posterior means and variances for an (N, d) batch of inputs."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.x.shape[1]:
        raise ValidationError(
            f"inputs have {x.shape[1]} columns, model expects {model.x.shape[1]}"
        )
    return _predict_batch(model, x)


def gpr_log_marginal_likelihood(model: GprModel) -> float:
    """Evidence of the fitted model, computed from the stored factorization."""
    centered = model.y - model.mean_offset
    n = len(centered)
    return float(
        -0.5 * centered @ model.alpha
        - np.sum(np.log(np.diag(model.chol)))
        - 0.5 * n * np.log(2.0 * np.pi)
    )


def gpr_fit_grid(x: np.ndarray, y: np.ndarray, params: KernelParams,
                 mean_offset: float = 0.0) -> GprModel:
    """Coarse grid search over (length_scale, noise_variance) maximizing the
    log marginal likelihood; falls back to ``params`` values on failure."""
    best = None
    best_lml = -np.inf
    for ls in LENGTH_SCALE_GRID:
        for nv in NOISE_GRID:
            candidate = KernelParams(
                length_scale=ls,
                signal_variance=params.signal_variance,
                noise_variance=nv,
                grid_search=params.grid_search,
            )
            try:
                model = gpr_fit(x, y, candidate, mean_offset)
            except GprFitError:
                continue
            lml = gpr_log_marginal_likelihood(model)
            if lml > best_lml:
                best, best_lml = model, lml
    if best is None:
        return gpr_fit(x, y, params, mean_offset)
    return best
