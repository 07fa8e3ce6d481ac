"""ReLU multilayer perceptron surrogate, trained in-repo.

The network is small enough (default 16-8 hidden) that a numpy trainer with
explicit backpropagation beats any framework on determinism and lets the
gradient check compare analytic parameter gradients against central finite
differences. The target scaler is folded into the output layer when training
finishes, so the stored weights predict in original cost units from scaled
inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .surrogate import Dataset, Scaler


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 500
    patience: int = 20
    learning_rate: float = 5e-5
    weight_decay: float = 1e-5
    batch_size: int = 64
    hidden: tuple[int, ...] = (16, 8)
    seed: int = 0

    def __post_init__(self):
        if min(self.max_epochs, self.patience, self.batch_size) < 0 or \
                min(self.learning_rate, self.weight_decay) < 0:
            raise ValueError("training settings must be nonnegative")


@dataclass
class MlpSurrogate:
    """Scaled-input ReLU net with the output affine already de-scaled."""

    x_scaler: Scaler
    layers: list  # [(w, b)] with w shaped (fan_out, fan_in)

    def forward(self, x):
        """Returns (prediction, preactivations per hidden layer)."""
        a = self.x_scaler.transform(np.asarray(x, float))
        preacts = []
        for w, b in self.layers[:-1]:
            z = a @ w.T + b
            preacts.append(z)
            a = np.maximum(z, 0.0)
        w, b = self.layers[-1]
        out = a @ w.T + b
        return out[..., 0], preacts

    def predict(self, x):
        x = np.asarray(x, float)
        if x.shape[-1] != self.layers[0][0].shape[1]:
            raise DimensionError("feature dimension mismatch")
        return self.forward(x)[0]

    @property
    def hidden_sizes(self) -> tuple[int, ...]:
        return tuple(w.shape[0] for w, _ in self.layers[:-1])


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    best_epoch: int = -1
    best_val: float = math.inf
    stopped_epoch: int = 0


def _init_layers(sizes, rng):
    """Seeded He-style uniform fan-in initialization."""
    layers = []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        bound = math.sqrt(6.0 / fan_in)
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        b = np.zeros(fan_out)
        layers.append((w, b))
    return layers


def _forward_scaled(layers, xs):
    acts = [xs]
    preacts = []
    a = xs
    for w, b in layers[:-1]:
        z = a @ w.T + b
        preacts.append(z)
        a = np.maximum(z, 0.0)
        acts.append(a)
    w, b = layers[-1]
    out = a @ w.T + b
    return out[:, 0], acts, preacts


def _backward_scaled(layers, acts, preacts, dout):
    """Gradients of the loss w.r.t. every (w, b), given dL/d(output)."""
    grads = [None] * len(layers)
    delta = dout[:, None]  # (B, 1)
    for li in range(len(layers) - 1, -1, -1):
        w, _ = layers[li]
        a_prev = acts[li]
        gw = delta.T @ a_prev
        gb = delta.sum(axis=0)
        grads[li] = (gw, gb)
        if li > 0:
            delta = (delta @ w) * (preacts[li - 1] > 0.0)
    return grads


def fit_mlp(dataset: Dataset, cfg: TrainConfig = TrainConfig()):
    """Train with Adam on MSE; early stopping restores the best-validation
    weights. Returns (MlpSurrogate, TrainHistory); deterministic given seed."""
    if dataset.train_idx.size == 0 or dataset.val_idx.size == 0:
        raise DimensionError("both dataset splits must be nonempty")
    xs = dataset.x_scaler.transform(dataset.x)
    ys = dataset.y_scaler.transform(dataset.y)
    xtr, ytr = xs[dataset.train_idx], ys[dataset.train_idx]
    xva, yva = xs[dataset.val_idx], ys[dataset.val_idx]

    rng = np.random.default_rng(cfg.seed)
    sizes = [dataset.n_features, *cfg.hidden, 1]
    layers = _init_layers(sizes, rng)

    beta1, beta2, eps = 0.9, 0.999, 1e-8
    m_state = [(np.zeros_like(w), np.zeros_like(b)) for w, b in layers]
    v_state = [(np.zeros_like(w), np.zeros_like(b)) for w, b in layers]
    step = 0

    hist = TrainHistory()
    best_layers = [(w.copy(), b.copy()) for w, b in layers]

    def val_loss():
        pred, _, _ = _forward_scaled(layers, xva)
        return float(np.mean((pred - yva) ** 2))

    hist.best_val = val_loss()
    hist.best_epoch = 0
    since_best = 0
    n_tr = xtr.shape[0]

    for epoch in range(cfg.max_epochs):
        perm = rng.permutation(n_tr)
        epoch_loss = 0.0
        for lo in range(0, n_tr, cfg.batch_size):
            idx = perm[lo:lo + cfg.batch_size]
            xb, yb = xtr[idx], ytr[idx]
            pred, acts, preacts = _forward_scaled(layers, xb)
            err = pred - yb
            loss = float(np.mean(err ** 2))
            if not math.isfinite(loss):
                raise ArithmeticError(f"non-finite training loss at epoch {epoch}")
            epoch_loss += loss * idx.size
            dout = 2.0 * err / idx.size
            grads = _backward_scaled(layers, acts, preacts, dout)
            step += 1
            bc1 = 1.0 - beta1 ** step
            bc2 = 1.0 - beta2 ** step
            for li, (w, b) in enumerate(layers):
                gw, gb = grads[li]
                gw = gw + cfg.weight_decay * w
                gb = gb + cfg.weight_decay * b
                mw, mb = m_state[li]
                vw, vb = v_state[li]
                mw[:] = beta1 * mw + (1 - beta1) * gw
                mb[:] = beta1 * mb + (1 - beta1) * gb
                vw[:] = beta2 * vw + (1 - beta2) * gw ** 2
                vb[:] = beta2 * vb + (1 - beta2) * gb ** 2
                w -= cfg.learning_rate * (mw / bc1) / (np.sqrt(vw / bc2) + eps)
                b -= cfg.learning_rate * (mb / bc1) / (np.sqrt(vb / bc2) + eps)
        hist.train_loss.append(epoch_loss / n_tr)
        vl = val_loss()
        hist.val_loss.append(vl)
        if vl < hist.best_val:
            hist.best_val = vl
            hist.best_epoch = epoch + 1
            best_layers = [(w.copy(), b.copy()) for w, b in layers]
            since_best = 0
        else:
            since_best += 1
            if since_best > cfg.patience:
                break
        hist.stopped_epoch = epoch + 1

    # fold the target de-scaler into the output affine
    sy = float(dataset.y_scaler.std[0])
    my = float(dataset.y_scaler.mean[0])
    w_out, b_out = best_layers[-1]
    best_layers[-1] = (sy * w_out, sy * b_out + my)
    model = MlpSurrogate(x_scaler=dataset.x_scaler, layers=best_layers)
    return model, hist


def loss_and_gradients(model: MlpSurrogate, x, y: float):
    """Pointwise squared error (pred - y)^2 and its analytic parameter
    gradients for the model as stored (scaled inputs, folded output)."""
    xs = model.x_scaler.transform(np.asarray(x, float)).reshape(1, -1)
    pred, acts, preacts = _forward_scaled(model.layers, xs)
    err = float(pred[0] - y)
    grads = _backward_scaled(model.layers, acts, preacts,
                             np.array([2.0 * err]))
    return err * err, grads


def finite_diff_gradients(model: MlpSurrogate, x, y: float, step: float = 1e-5):
    """Central finite differences of the same pointwise loss."""
    grads = []
    for li, (w, b) in enumerate(model.layers):
        gw = np.zeros_like(w)
        gb = np.zeros_like(b)
        for arr, garr in ((w, gw), (b, gb)):
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                ix = it.multi_index
                orig = arr[ix]
                arr[ix] = orig + step
                lp = _point_loss(model, x, y)
                arr[ix] = orig - step
                lm = _point_loss(model, x, y)
                arr[ix] = orig
                garr[ix] = (lp - lm) / (2 * step)
        grads.append((gw, gb))
    return grads


def _point_loss(model, x, y):
    pred = model.predict(np.asarray(x, float).reshape(1, -1))[0]
    return (pred - y) ** 2


def max_relative_gradient_error(analytic, numeric) -> float:
    worst = 0.0
    for (aw, ab), (nw, nb) in zip(analytic, numeric):
        for a, n in ((aw, nw), (ab, nb)):
            denom = np.maximum(np.abs(a) + np.abs(n), 1e-8)
            worst = max(worst, float((np.abs(a - n) / denom).max(initial=0.0)))
    return worst


def nudge_off_kinks(model: MlpSurrogate, x, rng, min_gap: float = 1e-5,
                    tries: int = 50):
    """Perturb x until no hidden preactivation sits within min_gap of zero."""
    x = np.asarray(x, float).copy()
    for _ in range(tries):
        _, preacts = model.forward(x.reshape(1, -1))
        gap = min((np.abs(z).min() for z in preacts), default=np.inf)
        if gap >= min_gap:
            return x
        x = x + rng.normal(scale=1e-3 * (1.0 + np.abs(x)), size=x.shape)
    raise ArithmeticError("could not move the probe point off ReLU kinks")


def grad_check(model: MlpSurrogate, x, y: float | None = None,
               tolerance: float = 1e-4, step: float = 1e-5, seed: int = 0):
    """Compare analytic and central-FD gradients at one (kink-free) point.

    Returns a report dict with the max relative error and both gradient sets.
    """
    rng = np.random.default_rng(seed)
    x = nudge_off_kinks(model, x, rng)
    if y is None:
        y = float(model.predict(x.reshape(1, -1))[0]) + 1.0
    _, analytic = loss_and_gradients(model, x, y)
    numeric = finite_diff_gradients(model, x, y, step=step)
    err = max_relative_gradient_error(analytic, numeric)
    return {"max_rel_err": err, "ok": err <= tolerance,
            "analytic": analytic, "numeric": numeric, "probe": x, "target": y}
