import numpy as np
import pytest

from stockblend.ann import (
    HIDDEN1,
    HIDDEN2,
    AnnModel,
    LmParams,
    _forward_batch,
    ann_forward,
    ann_forward_batch,
    ann_init,
    ann_jacobian,
    ann_train_lm,
)
from stockblend.errors import TrainingDivergedError, ValidationError


def zero_model(input_dim):
    return AnnModel(
        w1=np.zeros((HIDDEN1, input_dim)), b1=np.zeros(HIDDEN1),
        w2=np.zeros((HIDDEN2, HIDDEN1)), b2=np.zeros(HIDDEN2),
        w3=np.zeros(HIDDEN2), b3=0.0, input_dim=input_dim, rng_seed=0,
    )


class TestInit:
    def test_deterministic_per_seed(self):
        a = ann_init(11, seed=4)
        b = ann_init(11, seed=4)
        assert np.array_equal(a.w1, b.w1)
        assert np.array_equal(a.w2, b.w2)
        assert np.array_equal(a.w3, b.w3)
        assert a.b3 == b.b3

    def test_different_seed_differs(self):
        assert not np.array_equal(ann_init(11, 1).w1, ann_init(11, 2).w1)

    def test_topology(self):
        model = ann_init(11, 0)
        assert model.w1.shape == (10, 11)
        assert model.w2.shape == (7, 10)
        assert model.w3.shape == (7,)

    def test_weights_within_init_range(self):
        model = ann_init(6, 3)
        for arr in (model.w1, model.b1, model.w2, model.b2, model.w3):
            assert np.all(np.abs(arr) <= 0.5)

    def test_zero_input_dim_rejected(self):
        with pytest.raises(ValidationError):
            ann_init(0, 0)


class TestForward:
    def test_all_zero_parameters_give_zero(self):
        model = zero_model(4)
        # logsig(0) = 0.5 in both hidden layers, zero output layer
        assert ann_forward(model, np.zeros(4)) == 0.0

    def test_output_bias_passthrough(self):
        model = zero_model(4)
        model.b3 = 7.0
        assert ann_forward(model, np.array([1.0, -2.0, 3.0, 0.5])) == 7.0

    def test_hidden_activations_strictly_inside_unit_interval(self):
        rng = np.random.default_rng(0)
        model = ann_init(5, 12)
        x = rng.uniform(0, 1, size=(20, 5))
        _, a1, a2 = _forward_batch(model, x)
        assert np.all((a1 > 0) & (a1 < 1))
        assert np.all((a2 > 0) & (a2 < 1))

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            ann_forward(ann_init(5, 0), np.zeros(4))
        with pytest.raises(ValidationError):
            ann_forward_batch(ann_init(5, 0), np.zeros((3, 4)))


class TestJacobian:
    def finite_difference(self, model, x, h=1e-5):
        from stockblend.ann import _pack, _unpack
        theta = _pack(model)
        out = np.empty((len(x), theta.size))
        for j in range(theta.size):
            up, down = theta.copy(), theta.copy()
            up[j] += h
            down[j] -= h
            y_up = ann_forward_batch(_unpack(up, model.input_dim, 0), x)
            y_down = ann_forward_batch(_unpack(down, model.input_dim, 0), x)
            out[:, j] = (y_up - y_down) / (2 * h)
        return out

    def test_matches_central_differences_on_random_models(self):
        rng = np.random.default_rng(7)
        for trial in range(10):
            dim = int(rng.integers(2, 6))
            model = ann_init(dim, seed=100 + trial)
            x = rng.uniform(0, 1, size=(4, dim))
            analytic = ann_jacobian(model, x)
            numeric = self.finite_difference(model, x)
            rel = np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric)
            assert rel < 1e-4


class TestTrainLm:
    def test_zero_epochs_is_noop(self):
        model = ann_init(3, 1)
        x = np.random.default_rng(0).uniform(0, 1, size=(10, 3))
        y = np.linspace(0, 1, 10)
        trained, trace = ann_train_lm(model, x, y, LmParams(max_epochs=0))
        assert trace == []
        assert np.array_equal(trained.w1, model.w1)
        assert trained.b3 == model.b3

    def test_fits_constant_target(self):
        # closed-form optimum is MSE 0 (output bias alone suffices)
        rng = np.random.default_rng(1)
        x = rng.uniform(0, 1, size=(50, 3))
        y = np.full(50, 0.5)
        trained, trace = ann_train_lm(ann_init(3, 2), x, y, LmParams())
        pred = ann_forward_batch(trained, x)
        assert float(np.mean((pred - y) ** 2)) < 1e-4

    def test_fits_ramp_within_budget(self):
        x = np.linspace(0, 1, 50)[:, None]
        y = x.ravel()
        trained, trace = ann_train_lm(ann_init(1, 3), x, y, LmParams())
        pred = ann_forward_batch(trained, x)
        final_mse = float(np.mean((pred - y) ** 2))
        assert final_mse < 1e-3

        # least-squares oracle for the output layer on the trained hidden
        # features: the trained readout should be near readout-optimal
        _, _, a2 = _forward_batch(trained, x)
        design = np.hstack([a2, np.ones((len(x), 1))])
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        ls_mse = float(np.mean((design @ coef - y) ** 2))
        assert ls_mse <= final_mse <= ls_mse * 1.10 + 1e-9

    def test_trace_non_increasing(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(0, 1, size=(40, 2))
        y = 0.3 * x[:, 0] + 0.5 * x[:, 1] ** 2
        _, trace = ann_train_lm(ann_init(2, 4), x, y, LmParams(max_epochs=60))
        assert all(b <= a for a, b in zip(trace, trace[1:]))

    def test_nonfinite_input_diverges(self):
        x = np.array([[np.nan, 0.0]])
        with pytest.raises(TrainingDivergedError):
            ann_train_lm(ann_init(2, 0), x, np.array([1.0]), LmParams())

    def test_empty_training_set_rejected(self):
        with pytest.raises(ValidationError):
            ann_train_lm(ann_init(2, 0), np.empty((0, 2)), np.empty(0), LmParams())

    def test_param_validation(self):
        with pytest.raises(ValidationError):
            LmParams(mu_down=2.0)
        with pytest.raises(ValidationError):
            LmParams(mu_init=-1.0)
