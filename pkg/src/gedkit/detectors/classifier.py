"""Logistic classifier over text features, with permutation feature importance."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from ..errors import DataError
from ..evaluate import confusion, f_beta


@dataclass(frozen=True)
class LogisticModel:
    feature_names: tuple[str, ...]  # retained (non-constant) features
    mean: np.ndarray
    std: np.ndarray
    weights: np.ndarray
    bias: float
    l2: float

    def matrix(self, rows: Sequence[Mapping[str, float]]) -> np.ndarray:
        x = np.array([[float(r[name]) for name in self.feature_names] for r in rows])
        return (x - self.mean) / self.std

    def predict_proba(self, rows: Sequence[Mapping[str, float]]) -> np.ndarray:
        z = self.matrix(rows) @ self.weights + self.bias
        return 1.0 / (1.0 + np.exp(-z))

    def predict(self, rows: Sequence[Mapping[str, float]]) -> list[int]:
        return [1 if p > 0.5 else 0 for p in self.predict_proba(rows)]


def classifier_fit(
    rows: Sequence[Mapping[str, float]],
    labels: Sequence[int],
    l2: float = 1e-3,
    epochs: int = 2000,
    lr: float = 0.5,
    seed: int = 0,
    feature_names: Sequence[str] | None = None,
) -> LogisticModel:
    """Full-batch gradient descent on L2-regularized logistic loss.

    Features are standardized; constant columns are dropped. Deterministic:
    weights start at zero, so the seed only matters to downstream shuffles.
    """
    if len(rows) != len(labels):
        raise ValueError("rows and labels length mismatch")
    if len(set(labels)) < 2:
        raise DataError("classifier_fit needs both classes present")
    names = tuple(feature_names) if feature_names is not None else tuple(sorted(rows[0]))
    x = np.array([[float(r[n]) for n in names] for r in rows], dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)

    mean = x.mean(axis=0)
    std = x.std(axis=0, ddof=0)
    keep = std > 0
    names = tuple(n for n, k in zip(names, keep) if k)
    if not names:
        raise DataError("all features are constant")
    x = (x[:, keep] - mean[keep]) / std[keep]

    n, d = x.shape
    w = np.zeros(d)
    b = 0.0
    for _ in range(epochs):
        z = x @ w + b
        p = 1.0 / (1.0 + np.exp(-z))
        grad_w = x.T @ (p - y) / n + l2 * w
        grad_b = float(np.mean(p - y))
        w -= lr * grad_w
        b -= lr * grad_b
    return LogisticModel(names, mean[keep], std[keep], w, b, l2)


def save_classifier(model: LogisticModel, path: str | Path) -> None:
    obj = {
        "format": "gedkit.logistic",
        "version": 1,
        "feature_names": list(model.feature_names),
        "mean": model.mean.tolist(),
        "std": model.std.tolist(),
        "weights": model.weights.tolist(),
        "bias": model.bias,
        "l2": model.l2,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, separators=(",", ":"))
        fh.write("\n")


def load_classifier(path: str | Path) -> LogisticModel:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if obj.get("format") != "gedkit.logistic":
        raise DataError(f"{path}: not a gedkit.logistic file")
    return LogisticModel(
        tuple(obj["feature_names"]),
        np.asarray(obj["mean"], dtype=np.float64),
        np.asarray(obj["std"], dtype=np.float64),
        np.asarray(obj["weights"], dtype=np.float64),
        float(obj["bias"]),
        float(obj["l2"]),
    )


def loss_and_grad(
    model: LogisticModel, rows: Sequence[Mapping[str, float]], labels: Sequence[int]
) -> tuple[float, np.ndarray, float]:
    """Regularized logistic loss and its gradient at the model's parameters."""
    x = model.matrix(rows)
    y = np.asarray(labels, dtype=np.float64)
    z = x @ model.weights + model.bias
    p = 1.0 / (1.0 + np.exp(-z))
    eps = 1e-300
    loss = float(
        -np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps))
        + 0.5 * model.l2 * float(model.weights @ model.weights)
    )
    grad_w = x.T @ (p - y) / len(y) + model.l2 * model.weights
    grad_b = float(np.mean(p - y))
    return loss, grad_w, grad_b


def f05_metric(preds: Sequence[int], labels: Sequence[int]) -> float:
    c = confusion(list(preds), list(labels))
    return f_beta(c.precision, c.recall)


def _derived_seed(seed: int, *parts: object) -> int:
    key = "\x1f".join([str(seed)] + [str(p) for p in parts])
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big")


def permutation_importance(
    predictor: LogisticModel,
    rows: Sequence[Mapping[str, float]],
    labels: Sequence[int],
    metric: Callable[[Sequence[int], Sequence[int]], float] = f05_metric,
    repeats: int = 10,
    seed: int = 0,
) -> dict[str, float]:
    """Mean metric drop when one feature column is shuffled (model-agnostic)."""
    base = metric(predictor.predict(rows), labels)
    importances: dict[str, float] = {}
    for name in predictor.feature_names:
        drops = []
        for rep in range(repeats):
            rng = np.random.default_rng(_derived_seed(seed, name, rep))
            perm = rng.permutation(len(rows))
            shuffled = [
                {**row, name: float(rows[int(j)][name])}
                for row, j in zip(rows, perm)
            ]
            drops.append(base - metric(predictor.predict(shuffled), labels))
        importances[name] = float(np.mean(drops))
    return importances
