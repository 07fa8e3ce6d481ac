import numpy as np
import pytest

from capplan.mlp import (MlpSurrogate, TrainConfig, fit_mlp, grad_check,
                         finite_diff_gradients, loss_and_gradients,
                         max_relative_gradient_error)
from capplan.surrogate import Dataset, Scaler


def trained_net(n_features=6, hidden=(16, 8), seed=0, epochs=8):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 3, size=(200, n_features))
    y = (x ** 1.5).sum(axis=1) + 5.0
    ds = Dataset.build(x, y, seed=seed)
    model, _ = fit_mlp(ds, TrainConfig(max_epochs=epochs, hidden=hidden, seed=seed))
    return model, x


def test_linear_output_layer_gradient_near_exact():
    # no hidden layer: loss quadratic in parameters, FD error ~ truncation only
    sc = Scaler(mean=np.zeros(3), std=np.ones(3))
    model = MlpSurrogate(x_scaler=sc, layers=[(np.array([[0.3, -0.7, 1.1]]),
                                               np.array([0.2]))])
    x = np.array([1.0, 2.0, -0.5])
    _, ana = loss_and_gradients(model, x, y=4.0)
    num = finite_diff_gradients(model, x, y=4.0)
    assert max_relative_gradient_error(ana, num) <= 1e-8


def test_default_net_gradcheck_under_1e4():
    model, x = trained_net(seed=0)
    report = grad_check(model, x[0], tolerance=1e-4, seed=0)
    assert report["ok"], f"max rel err {report['max_rel_err']:.2e}"


def test_gradcheck_ten_random_points():
    model, x = trained_net(seed=3)
    rng = np.random.default_rng(1)
    for i in range(10):
        probe = rng.uniform(0, 3, size=x.shape[1])
        report = grad_check(model, probe, tolerance=1e-4, seed=i)
        assert report["ok"], f"point {i}: {report['max_rel_err']:.2e}"


def test_corrupted_gradient_fails_check():
    model, x = trained_net(seed=5)
    report = grad_check(model, x[1], tolerance=1e-4, seed=0)
    assert report["ok"]
    ana = report["analytic"]
    gw = ana[-1][0]  # output-layer weight gradients: never all ~zero
    ix = np.unravel_index(np.argmax(np.abs(gw)), gw.shape)
    assert abs(gw[ix]) > 1e-8
    gw[ix] *= 2.0
    err = max_relative_gradient_error(ana, report["numeric"])
    assert err > 1e-4


def test_probe_moved_off_kinks():
    model, x = trained_net(seed=7)
    report = grad_check(model, x[2], tolerance=1e-4, seed=0)
    _, preacts = model.forward(report["probe"].reshape(1, -1))
    assert min(np.abs(z).min() for z in preacts) >= 1e-5
