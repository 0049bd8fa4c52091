"""Diagonal-covariance Gaussian mixture fitted by EM, and the surprisal gap."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import DataError

_VAR_FLOOR = 1e-8


@dataclass(frozen=True)
class GmmModel:
    weights: np.ndarray    # k
    means: np.ndarray      # k x d
    variances: np.ndarray  # k x d, diagonal covariances
    log_likelihoods: tuple[float, ...] = ()  # per-iteration mean LL trace

    @property
    def k(self) -> int:
        return int(self.weights.shape[0])


def _log_gaussian(x: np.ndarray, means: np.ndarray, variances: np.ndarray) -> np.ndarray:
    # x: n x d -> n x k matrix of per-component log densities
    n, d = x.shape
    out = np.empty((n, means.shape[0]))
    for c in range(means.shape[0]):
        z = (x - means[c]) ** 2 / variances[c]
        out[:, c] = -0.5 * (np.sum(z, axis=1) + np.sum(np.log(2 * math.pi * variances[c])))
    return out


def _kmeanspp_centers(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = [x[int(rng.integers(n))]]
    for _ in range(1, k):
        d2 = np.min(
            [np.sum((x - c) ** 2, axis=1) for c in centers], axis=0
        )
        total = float(np.sum(d2))
        if total <= 0:
            centers.append(x[int(rng.integers(n))])
            continue
        centers.append(x[int(rng.choice(n, p=d2 / total))])
    return np.stack(centers)


def gmm_fit(
    vectors: Sequence[Sequence[float]],
    k: int,
    seed: int = 0,
    max_iter: int = 200,
    tol: float = 1e-6,
) -> GmmModel:
    """EM with k-means++ initialization; diagonal variances floored at 1e-8."""
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise DataError("gmm_fit expects a 2-D matrix of vectors")
    n, d = x.shape
    if n < k:
        raise DataError(f"gmm_fit needs at least k={k} vectors, got {n}")
    rng = np.random.default_rng(seed)
    means = _kmeanspp_centers(x, k, rng)
    variances = np.tile(np.maximum(np.var(x, axis=0), _VAR_FLOOR), (k, 1))
    weights = np.full(k, 1.0 / k)

    trace: list[float] = []
    prev_ll = -math.inf
    for _ in range(max_iter):
        log_comp = _log_gaussian(x, means, variances) + np.log(weights)
        peak = np.max(log_comp, axis=1, keepdims=True)
        log_norm = peak[:, 0] + np.log(np.sum(np.exp(log_comp - peak), axis=1))
        ll = float(np.mean(log_norm))
        trace.append(ll)
        resp = np.exp(log_comp - log_norm[:, None])

        counts = np.sum(resp, axis=0)
        weights = counts / n
        means = (resp.T @ x) / counts[:, None]
        for c in range(k):
            diff2 = (x - means[c]) ** 2
            variances[c] = np.maximum(
                (resp[:, c] @ diff2) / counts[c], _VAR_FLOOR
            )
        if abs(ll - prev_ll) < tol:
            break
        prev_ll = ll
    return GmmModel(weights, means, variances, tuple(trace))


def gmm_log_density(model: GmmModel, vectors: Sequence[Sequence[float]]) -> np.ndarray:
    x = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    log_comp = _log_gaussian(x, model.means, model.variances) + np.log(model.weights)
    peak = np.max(log_comp, axis=1, keepdims=True)
    return peak[:, 0] + np.log(np.sum(np.exp(log_comp - peak), axis=1))


def surprisal_gap(
    model: GmmModel,
    corrupted_vecs: Sequence[Sequence[float]],
    fixed_vecs: Sequence[Sequence[float]],
) -> float:
    """Mean negative log density of corrupted minus fixed vectors."""
    if len(corrupted_vecs) == 0 or len(fixed_vecs) == 0:
        raise DataError("surprisal_gap needs nonempty vector sets")
    nll_c = -gmm_log_density(model, corrupted_vecs)
    nll_f = -gmm_log_density(model, fixed_vecs)
    return float(np.mean(nll_c) - np.mean(nll_f))


def save_gmm(model: GmmModel, path: str | Path) -> None:
    obj = {
        "format": "gedkit.gmm",
        "version": 1,
        "weights": model.weights.tolist(),
        "means": model.means.tolist(),
        "variances": model.variances.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, separators=(",", ":"))
        fh.write("\n")


def load_gmm(path: str | Path) -> GmmModel:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if obj.get("format") != "gedkit.gmm":
        raise DataError(f"{path}: not a gedkit.gmm file")
    return GmmModel(
        np.asarray(obj["weights"], dtype=np.float64),
        np.asarray(obj["means"], dtype=np.float64),
        np.asarray(obj["variances"], dtype=np.float64),
    )
