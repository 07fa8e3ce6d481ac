"""Datasets, scalers, and the linear expected-cost surrogate.

Both surrogates are trained on standardized features/targets; the fitted
affine maps are folded back so that `predict` works in original units and
the embedding needs no extra scaling constraints.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

MODEL_FORMAT = "capplan-model/1"


@dataclass(frozen=True)
class Scaler:
    """Per-coordinate affine map to zero mean, unit variance."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, values: np.ndarray) -> "Scaler":
        mean = values.mean(axis=0)
        std = values.std(axis=0)
        std = np.where(std > 0.0, std, 1.0)  # zero-variance coords keep unit scale
        return cls(mean=np.atleast_1d(mean), std=np.atleast_1d(std))

    def transform(self, v):
        return (v - self.mean) / self.std

    def inverse(self, v):
        return v * self.std + self.mean


@dataclass
class Dataset:
    x: np.ndarray
    y: np.ndarray
    train_idx: np.ndarray
    val_idx: np.ndarray
    x_scaler: Scaler
    y_scaler: Scaler

    @classmethod
    def build(cls, x: np.ndarray, y: np.ndarray, val_fraction: float = 0.2,
              seed: int = 0) -> "Dataset":
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if x.ndim != 2 or y.shape != (x.shape[0],):
            raise DimensionError("dataset needs x (K,n) and y (K,)")
        if x.shape[0] < 2:
            raise DimensionError("dataset needs at least two rows")
        rng = np.random.default_rng(seed)
        perm = rng.permutation(x.shape[0])
        n_val = max(1, int(round(val_fraction * x.shape[0]))) if val_fraction > 0 else 0
        n_val = min(n_val, x.shape[0] - 1)
        val_idx = np.sort(perm[:n_val])
        train_idx = np.sort(perm[n_val:])
        x_scaler = Scaler.fit(x[train_idx])
        y_scaler = Scaler.fit(y[train_idx])
        return cls(x=x, y=y, train_idx=train_idx, val_idx=val_idx,
                   x_scaler=x_scaler, y_scaler=y_scaler)

    @property
    def n_features(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class LinearSurrogate:
    """Affine predictor in original units: cost = beta @ x + beta0."""

    beta: np.ndarray
    beta0: float

    def predict(self, x):
        x = np.asarray(x, float)
        if x.shape[-1] != self.beta.size:
            raise DimensionError("feature dimension mismatch")
        return x @ self.beta + self.beta0


def fit_linear(dataset: Dataset) -> LinearSurrogate:
    """Least squares on the scaled training split, ridge fallback when the
    Gram matrix is near-singular or the sample is smaller than the feature
    count, coefficients unfolded to original units."""
    xt = dataset.x_scaler.transform(dataset.x[dataset.train_idx])
    yt = dataset.y_scaler.transform(dataset.y[dataset.train_idx])
    k, n = xt.shape
    design = np.hstack([xt, np.ones((k, 1))])
    gram = design.T @ design
    rhs = design.T @ yt
    needs_ridge = k <= n or np.linalg.cond(gram) > 1e10
    if needs_ridge:
        lam = 1e-8 * np.trace(gram) / gram.shape[0]
        gram = gram + lam * np.eye(gram.shape[0])
    coef = np.linalg.solve(gram, rhs)
    beta_s, b0_s = coef[:-1], coef[-1]

    sy = float(dataset.y_scaler.std[0])
    my = float(dataset.y_scaler.mean[0])
    beta = sy * beta_s / dataset.x_scaler.std
    beta0 = my + sy * (b0_s - float((beta_s / dataset.x_scaler.std) @ dataset.x_scaler.mean))
    return LinearSurrogate(beta=beta, beta0=float(beta0))


def predict(model, x):
    """Original-units prediction for either surrogate kind."""
    return model.predict(x)


def mape(model, x: np.ndarray, y: np.ndarray) -> float:
    """Mean absolute percentage error over a split, in percent."""
    y = np.asarray(y, float)
    if np.any(y == 0.0):
        raise ValueError("MAPE undefined for zero targets")
    preds = np.asarray(model.predict(np.asarray(x, float)))
    return float(np.mean(np.abs(preds - y) / np.abs(y)) * 100.0)


def save_model(model, path) -> None:
    from .mlp import MlpSurrogate

    if isinstance(model, LinearSurrogate):
        doc = {"format": MODEL_FORMAT, "kind": "linear",
               "beta": model.beta.tolist(), "beta0": model.beta0}
    elif isinstance(model, MlpSurrogate):
        doc = {"format": MODEL_FORMAT, "kind": "mlp",
               "x_mean": model.x_scaler.mean.tolist(),
               "x_std": model.x_scaler.std.tolist(),
               "layers": [{"w": w.tolist(), "b": b.tolist()}
                          for w, b in model.layers]}
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(path):
    from .mlp import MlpSurrogate

    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"unsupported model format {doc.get('format')!r}")
    if doc["kind"] == "linear":
        return LinearSurrogate(beta=np.array(doc["beta"]), beta0=doc["beta0"])
    if doc["kind"] == "mlp":
        layers = [(np.array(l["w"]), np.array(l["b"])) for l in doc["layers"]]
        return MlpSurrogate(x_scaler=Scaler(mean=np.array(doc["x_mean"]),
                                            std=np.array(doc["x_std"])),
                            layers=layers)
    raise ValueError(f"unknown model kind {doc['kind']!r}")
