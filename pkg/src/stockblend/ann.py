"""Feed-forward network (10 and 7 log-sigmoid hidden units, linear output)
trained by damped Gauss-Newton (Levenberg-Marquardt) on the full batch.

The Jacobian of the network output with respect to every weight and bias is
assembled analytically; each accepted step must not increase the training
MSE, with the damping factor raised until such a step is found.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TrainingDivergedError, ValidationError

HIDDEN1 = 10
HIDDEN2 = 7


@dataclass(frozen=True)
class LmParams:
    """Damping schedule and stopping rules for the trainer."""

    mu_init: float = 1e-3
    mu_up: float = 10.0
    mu_down: float = 0.1
    max_epochs: int = 200
    gradient_tol: float = 1e-7
    mu_max: float = 1e10

    def __post_init__(self):
        for name in ("mu_init", "mu_up", "mu_down", "gradient_tol", "mu_max"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if not (self.mu_down < 1.0 < self.mu_up):
            raise ValidationError("need mu_down < 1 < mu_up")
        if self.max_epochs < 0:
            raise ValidationError("max_epochs must be >= 0")


@dataclass
class AnnModel:
    """Weights and biases of the fixed 10/7/1 topology."""

    w1: np.ndarray  # (HIDDEN1, input_dim)
    b1: np.ndarray  # (HIDDEN1,)
    w2: np.ndarray  # (HIDDEN2, HIDDEN1)
    b2: np.ndarray  # (HIDDEN2,)
    w3: np.ndarray  # (HIDDEN2,)
    b3: float
    input_dim: int
    rng_seed: int

    def __post_init__(self):
        expected = {
            "w1": (HIDDEN1, self.input_dim),
            "b1": (HIDDEN1,),
            "w2": (HIDDEN2, HIDDEN1),
            "b2": (HIDDEN2,),
            "w3": (HIDDEN2,),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValidationError(
                    f"{name} has shape {getattr(self, name).shape}, expected {shape}"
                )
        for arr in (self.w1, self.b1, self.w2, self.b2, self.w3):
            if not np.all(np.isfinite(arr)):
                raise ValidationError("model parameters must be finite")
        if not np.isfinite(self.b3):
            raise ValidationError("model parameters must be finite")

    @property
    def param_count(self) -> int:
        return (HIDDEN1 * self.input_dim + HIDDEN1
                + HIDDEN2 * HIDDEN1 + HIDDEN2 + HIDDEN2 + 1)


def logsig(z: np.ndarray) -> np.ndarray:
    """Numerically stable 1/(1+exp(-z))."""
    return 0.5 * (np.tanh(0.5 * z) + 1.0)


def ann_init(input_dim: int, seed: int) -> AnnModel:
    """Fresh model with all parameters uniform in [-0.5, 0.5]."""
    if input_dim < 1:
        raise ValidationError(f"input_dim must be >= 1, got {input_dim}")
    rng = np.random.default_rng(seed)
    return AnnModel(
        w1=rng.uniform(-0.5, 0.5, size=(HIDDEN1, input_dim)),
        b1=rng.uniform(-0.5, 0.5, size=HIDDEN1),
        w2=rng.uniform(-0.5, 0.5, size=(HIDDEN2, HIDDEN1)),
        b2=rng.uniform(-0.5, 0.5, size=HIDDEN2),
        w3=rng.uniform(-0.5, 0.5, size=HIDDEN2),
        b3=float(rng.uniform(-0.5, 0.5)),
        input_dim=input_dim,
        rng_seed=seed,
    )


def _forward_batch(model: AnnModel, x: np.ndarray):
    """Outputs plus hidden activations for an (N, input_dim) batch."""
    a1 = logsig(x @ model.w1.T + model.b1)
    a2 = logsig(a1 @ model.w2.T + model.b2)
    y = a2 @ model.w3 + model.b3
    return y, a1, a2


def ann_forward(model: AnnModel, x) -> float:
    """Network output for a single feature vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.input_dim,):
        raise ValidationError(
            f"input has shape {x.shape}, expected ({model.input_dim},)"
        )
    y, _, _ = _forward_batch(model, x[None, :])
    return float(y[0])


def ann_forward_batch(model: AnnModel, x) -> np.ndarray:
    """Network outputs for an (N, input_dim) batch."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.input_dim:
        raise ValidationError(
            f"inputs have {x.shape[1]} columns, model expects {model.input_dim}"
        )
    return _forward_batch(model, x)[0]


def _pack(model: AnnModel) -> np.ndarray:
    return np.concatenate([
        model.w1.ravel(), model.b1,
        model.w2.ravel(), model.b2,
        model.w3, [model.b3],
    ])


def _unpack(theta: np.ndarray, input_dim: int, rng_seed: int) -> AnnModel:
    sizes = [HIDDEN1 * input_dim, HIDDEN1, HIDDEN2 * HIDDEN1, HIDDEN2, HIDDEN2, 1]
    parts = np.split(theta, np.cumsum(sizes)[:-1])
    return AnnModel(
        w1=parts[0].reshape(HIDDEN1, input_dim),
        b1=parts[1].copy(),
        w2=parts[2].reshape(HIDDEN2, HIDDEN1),
        b2=parts[3].copy(),
        w3=parts[4].copy(),
        b3=float(parts[5][0]),
        input_dim=input_dim,
        rng_seed=rng_seed,
    )


def ann_jacobian(model: AnnModel, x: np.ndarray) -> np.ndarray:
    """d output / d parameters for each row of ``x``; shape (N, param_count).

    Column order matches the internal packing [w1, b1, w2, b2, w3, b3].
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    _, a1, a2 = _forward_batch(model, x)
    g2 = model.w3 * a2 * (1.0 - a2)                      # (N, H2) = dy/dz2
    g1 = (g2 @ model.w2) * a1 * (1.0 - a1)               # (N, H1) = dy/dz1
    n = x.shape[0]
    d_w1 = (g1[:, :, None] * x[:, None, :]).reshape(n, -1)
    d_w2 = (g2[:, :, None] * a1[:, None, :]).reshape(n, -1)
    return np.hstack([d_w1, g1, d_w2, g2, a2, np.ones((n, 1))])


def ann_train_lm(model: AnnModel, x: np.ndarray, y: np.ndarray,
                 params: LmParams) -> tuple[AnnModel, list[float]]:
    """Train on the full batch; returns (trained model, per-epoch MSE trace).

    Each accepted step does not increase the MSE; when no such step is found
    before the damping factor exceeds ``mu_max``, the best model so far is
    returned.  The trace holds the MSE after every accepted epoch.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if x.shape[0] == 0:
        raise ValidationError("training set must be nonempty")
    if x.shape[0] != y.shape[0]:
        raise ValidationError(f"{x.shape[0]} inputs vs {y.shape[0]} targets")
    if x.shape[1] != model.input_dim:
        raise ValidationError(
            f"inputs have {x.shape[1]} columns, model expects {model.input_dim}"
        )

    theta = _pack(model)
    pred, _, _ = _forward_batch(model, x)
    residual = pred - y
    mse = float(np.mean(residual ** 2))
    if not np.isfinite(mse):
        raise TrainingDivergedError(f"initial loss is not finite ({mse})")

    best_theta, best_mse = theta.copy(), mse
    trace: list[float] = []
    mu = params.mu_init
    identity = np.eye(theta.size)

    for _ in range(params.max_epochs):
        current = _unpack(theta, model.input_dim, model.rng_seed)
        jac = ann_jacobian(current, x)
        grad = jac.T @ residual
        if np.max(np.abs(grad)) < params.gradient_tol:
            break
        hess = jac.T @ jac

        accepted = False
        while mu <= params.mu_max:
            try:
                step = np.linalg.solve(hess + mu * identity, -grad)
            except np.linalg.LinAlgError:
                mu *= params.mu_up
                continue
            candidate = theta + step
            cand_model = _unpack(candidate, model.input_dim, model.rng_seed)
            cand_pred, _, _ = _forward_batch(cand_model, x)
            cand_residual = cand_pred - y
            cand_mse = float(np.mean(cand_residual ** 2))
            if np.isfinite(cand_mse) and cand_mse <= mse:
                theta, residual, mse = candidate, cand_residual, cand_mse
                mu = max(mu * params.mu_down, 1e-20)
                accepted = True
                break
            mu *= params.mu_up
        if not accepted:
            break
        trace.append(mse)
        if mse < best_mse:
            best_theta, best_mse = theta.copy(), mse

    return _unpack(best_theta, model.input_dim, model.rng_seed), trace
