import numpy as np
import pytest

from capplan.errors import DimensionError
from capplan.mlp import MlpSurrogate, TrainConfig, _init_layers, fit_mlp
from capplan.surrogate import (Dataset, LinearSurrogate, Scaler, fit_linear,
                               load_model, mape, predict, save_model)
from oracles import pinv_least_squares


def linear_dataset(k=200, seed=0):
    # targets stay in [3, 7], bounded away from zero so MAPE is meaningful
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 2, size=(k, 1))
    y = 2.0 * x[:, 0] + 3.0
    return Dataset.build(x, y, val_fraction=0.2, seed=1)


def test_scaler_roundtrip_within_1e12():
    rng = np.random.default_rng(2)
    col_scale = 10.0 ** rng.integers(-3, 6, size=6)
    v = rng.uniform(-5, 5, size=(40, 6)) * col_scale
    sc = Scaler.fit(v)
    back = sc.inverse(sc.transform(v))
    assert np.max(np.abs(back - v) / np.maximum(col_scale, np.abs(v))) < 1e-12


def test_fit_linear_exact_recovery():
    model = fit_linear(linear_dataset())
    assert model.beta[0] == pytest.approx(2.0, abs=1e-8)
    assert model.beta0 == pytest.approx(3.0, abs=1e-8)


def test_fit_linear_constant_targets():
    x = np.random.default_rng(0).uniform(size=(30, 3))
    y = np.full(30, 11.5)
    model = fit_linear(Dataset.build(x, y, seed=0))
    assert np.allclose(model.beta, 0.0, atol=1e-9)
    assert model.beta0 == pytest.approx(11.5, rel=1e-12)


def test_fit_linear_matches_pinv_oracle():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(50, 5))
    y = rng.normal(size=50)
    ds = Dataset.build(x, y, val_fraction=0.2, seed=3)
    model = fit_linear(ds)
    beta_o, b0_o = pinv_least_squares(x[ds.train_idx], y[ds.train_idx])
    mse = np.mean((model.predict(x[ds.train_idx]) - y[ds.train_idx]) ** 2)
    mse_o = np.mean((x[ds.train_idx] @ beta_o + b0_o - y[ds.train_idx]) ** 2)
    assert mse == pytest.approx(mse_o, rel=1e-8)


def test_fit_linear_rejects_degenerate():
    with pytest.raises(DimensionError):
        Dataset.build(np.ones((1, 2)), np.ones(1))


def test_folding_correctness_against_scaled_fit():
    rng = np.random.default_rng(9)
    x = rng.uniform(10, 500, size=(80, 4))
    y = x @ np.array([1e4, -2e3, 5e2, 0.0]) + 1e6 + rng.normal(scale=100, size=80)
    ds = Dataset.build(x, y, seed=2)
    model = fit_linear(ds)
    xt = ds.x_scaler.transform(x)
    # refit in scaled space and de-scale predictions manually
    import numpy.linalg as la
    design = np.hstack([xt[ds.train_idx], np.ones((ds.train_idx.size, 1))])
    coef = la.solve(design.T @ design, design.T @ ds.y_scaler.transform(y[ds.train_idx]))
    scaled_pred = ds.y_scaler.inverse(np.hstack([xt, np.ones((80, 1))]) @ coef)
    assert np.allclose(model.predict(x), scaled_pred, rtol=1e-9)


# --- predict ---

def test_linear_predict_hand_case():
    m = LinearSurrogate(beta=np.array([1.0, 1.0]), beta0=0.0)
    assert predict(m, np.array([2.0, 3.0])) == pytest.approx(5.0)
    with pytest.raises(DimensionError):
        predict(m, np.array([1.0, 2.0, 3.0]))


def test_mlp_hand_forward_pass():
    # 1-2-1 ReLU net evaluated by hand at three probes
    sc = Scaler(mean=np.zeros(1), std=np.ones(1))
    layers = [(np.array([[1.0], [-2.0]]), np.array([0.5, 1.0])),
              (np.array([[3.0, -1.0]]), np.array([0.25]))]
    m = MlpSurrogate(x_scaler=sc, layers=layers)
    for x in (-1.0, 0.4, 2.0):
        h1 = max(0.0, 1.0 * x + 0.5)
        h2 = max(0.0, -2.0 * x + 1.0)
        expected = 3.0 * h1 - 1.0 * h2 + 0.25
        assert predict(m, np.array([x])) == pytest.approx(expected, rel=1e-12)


def test_mlp_zero_weights_outputs_bias():
    sc = Scaler(mean=np.zeros(2), std=np.ones(2))
    layers = [(np.zeros((3, 2)), np.zeros(3)), (np.zeros((1, 3)), np.array([42.0]))]
    m = MlpSurrogate(x_scaler=sc, layers=layers)
    assert predict(m, np.array([5.0, -3.0])) == pytest.approx(42.0)


# --- mape ---

def test_mape_perfect_predictor():
    m = LinearSurrogate(beta=np.array([2.0]), beta0=3.0)
    x = np.array([[1.0], [2.0]])
    assert mape(m, x, 2 * x[:, 0] + 3) == pytest.approx(0.0)


def test_mape_uniform_ten_percent():
    m = LinearSurrogate(beta=np.array([0.0]), beta0=0.0)
    x = np.zeros((4, 1))
    y = np.array([10.0, 20.0, -10.0, 5.0])
    model = LinearSurrogate(beta=np.array([0.0]), beta0=0.0)
    preds_target = 1.1 * y

    class Fixed:
        def predict(self, xs):
            return preds_target

    assert mape(Fixed(), x, y) == pytest.approx(10.0)


def test_mape_hand_three_points():
    class Fixed:
        def predict(self, xs):
            return np.array([11.0, 18.0, 33.0])

    x = np.zeros((3, 1))
    y = np.array([10.0, 20.0, 30.0])
    expected = np.mean([0.1, 0.1, 0.1]) * 100
    assert mape(Fixed(), x, y) == pytest.approx(expected)


# --- fit_mlp ---

def test_zero_epochs_returns_seeded_init():
    ds = linear_dataset()
    cfg = TrainConfig(max_epochs=0, seed=4)
    model, hist = fit_mlp(ds, cfg)
    rng = np.random.default_rng(4)
    init = _init_layers([1, 16, 8, 1], rng)
    for (w, b), (wi, bi) in zip(model.layers[:-1], init[:-1]):
        assert np.array_equal(w, wi)
        assert np.array_equal(b, bi)
    # output layer is the init with the target de-scaler folded in
    sy = float(ds.y_scaler.std[0])
    assert np.array_equal(model.layers[-1][0], sy * init[-1][0])
    assert hist.stopped_epoch == 0


def test_same_seed_identical_weights():
    ds = linear_dataset()
    cfg = TrainConfig(max_epochs=30, seed=7)
    m1, _ = fit_mlp(ds, cfg)
    m2, _ = fit_mlp(ds, cfg)
    for (w1, b1), (w2, b2) in zip(m1.layers, m2.layers):
        assert np.array_equal(w1, w2)
        assert np.array_equal(b1, b2)


def test_training_reaches_low_mape_on_linear_target():
    ds = linear_dataset(k=1000, seed=3)
    model, hist = fit_mlp(ds, TrainConfig(seed=1))
    assert hist.stopped_epoch <= 500
    val_mape = mape(model, ds.x[ds.val_idx], ds.y[ds.val_idx])
    assert val_mape < 2.0, f"validation MAPE {val_mape:.2f}% after {hist.stopped_epoch} epochs"


def test_early_stopping_best_epoch_minimal():
    ds = linear_dataset(k=120, seed=5)
    model, hist = fit_mlp(ds, TrainConfig(max_epochs=120, seed=2))
    assert hist.best_val == pytest.approx(min([hist.val_loss[0]] + hist.val_loss), rel=1e-12)


def test_piecewise_linearity_three_point_collinearity():
    ds = linear_dataset(k=100, seed=6)
    model, _ = fit_mlp(ds, TrainConfig(max_epochs=15, seed=3))
    rng = np.random.default_rng(0)
    x0 = rng.uniform(-1, 1, size=1)
    d = rng.normal(size=1)
    eps = 1e-7
    f0 = float(model.predict(x0.reshape(1, -1)))
    f1 = float(model.predict((x0 + eps * d).reshape(1, -1)))
    f2 = float(model.predict((x0 + 2 * eps * d).reshape(1, -1)))
    assert f2 - 2 * f1 + f0 == pytest.approx(0.0, abs=1e-9 * max(1.0, abs(f0)))


def test_model_file_roundtrip_bit_exact(tmp_path):
    ds = linear_dataset(k=60, seed=8)
    model, _ = fit_mlp(ds, TrainConfig(max_epochs=5, seed=9))
    p1, p2 = tmp_path / "m1.json", tmp_path / "m2.json"
    save_model(model, p1)
    again = load_model(p1)
    save_model(again, p2)
    assert p1.read_bytes() == p2.read_bytes()
    xs = np.random.default_rng(1).uniform(-1, 1, size=(10, 1))
    assert np.array_equal(model.predict(xs), again.predict(xs))

    lin = fit_linear(ds)
    save_model(lin, p1)
    lin2 = load_model(p1)
    assert np.array_equal(lin.beta, lin2.beta) and lin.beta0 == lin2.beta0
