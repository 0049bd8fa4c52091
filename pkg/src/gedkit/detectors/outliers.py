"""Outlier scorers over embedding vectors: KDE, isolation forest, ABOD.

All three emit scores where higher means more anomalous, and a decision
threshold is set from the training-score quantile implied by an assumed
contamination rate.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import DataError

logger = logging.getLogger(__name__)

_EULER_GAMMA = 0.5772156649015329


def _logsumexp(values: np.ndarray, axis: int = -1) -> np.ndarray:
    peak = np.max(values, axis=axis, keepdims=True)
    out = peak.squeeze(axis) + np.log(np.sum(np.exp(values - peak), axis=axis))
    return out


# ---------------------------------------------------------------- KDE

@dataclass(frozen=True)
class KdeModel:
    points: np.ndarray      # n x d training matrix
    bandwidths: np.ndarray  # per-dimension, Scott's rule


def kde_fit(vectors: Sequence[Sequence[float]]) -> KdeModel:
    """Gaussian product kernel with per-dimension Scott bandwidth n^(-1/(d+4)) * sigma."""
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataError("kde_fit needs at least 2 vectors")
    n, d = x.shape
    sigma = np.std(x, axis=0, ddof=1)
    if np.any(sigma == 0.0):
        logger.warning("kde_fit: %d zero-variance dimensions, adding jitter", int(np.sum(sigma == 0.0)))
        sigma = np.where(sigma == 0.0, 1e-12, sigma)
    h = n ** (-1.0 / (d + 4)) * sigma
    return KdeModel(x, h)


def kde_log_density(model: KdeModel, v: Sequence[float]) -> float:
    x = np.asarray(v, dtype=np.float64)
    h = model.bandwidths
    z = (model.points - x) / h
    log_kernels = -0.5 * np.sum(z * z, axis=1) - np.sum(np.log(h * math.sqrt(2 * math.pi)))
    return float(_logsumexp(log_kernels) - math.log(model.points.shape[0]))


def kde_score(model: KdeModel, v: Sequence[float]) -> float:
    """Anomaly score: negative log density (higher = more anomalous)."""
    return -kde_log_density(model, v)


# ---------------------------------------------------- isolation forest

def _average_path_length(n: int) -> float:
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    return 2.0 * (math.log(n - 1) + _EULER_GAMMA) - 2.0 * (n - 1) / n


def _build_tree(x: np.ndarray, rng: np.random.Generator, depth: int, limit: int) -> dict:
    n = x.shape[0]
    if n <= 1 or depth >= limit or bool(np.all(x == x[0])):
        return {"leaf": n}
    for _ in range(8):  # retry features whose range collapsed
        q = int(rng.integers(0, x.shape[1]))
        lo, hi = float(np.min(x[:, q])), float(np.max(x[:, q]))
        if lo < hi:
            break
    else:
        return {"leaf": n}
    p = float(rng.uniform(lo, hi))
    mask = x[:, q] < p
    return {
        "q": q,
        "p": p,
        "left": _build_tree(x[mask], rng, depth + 1, limit),
        "right": _build_tree(x[~mask], rng, depth + 1, limit),
    }


@dataclass(frozen=True)
class IsolationForestModel:
    trees: list[dict]
    subsample: int


def iforest_fit(
    vectors: Sequence[Sequence[float]],
    n_trees: int = 100,
    subsample: int = 256,
    seed: int = 0,
) -> IsolationForestModel:
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataError("iforest_fit needs at least 2 vectors")
    rng = np.random.default_rng(seed)
    psi = min(subsample, x.shape[0])
    limit = int(math.ceil(math.log2(max(2, psi))))
    trees = []
    for _ in range(n_trees):
        idx = rng.choice(x.shape[0], size=psi, replace=False)
        trees.append(_build_tree(x[idx], rng, 0, limit))
    return IsolationForestModel(trees, psi)


def _path_length(tree: dict, v: np.ndarray) -> float:
    depth = 0.0
    node = tree
    while "leaf" not in node:
        node = node["left"] if v[node["q"]] < node["p"] else node["right"]
        depth += 1.0
    return depth + _average_path_length(node["leaf"])


def iforest_score(model: IsolationForestModel, v: Sequence[float]) -> float:
    """Standard isolation-forest anomaly score 2^(-E[pathlen]/c(psi)), in (0, 1)."""
    x = np.asarray(v, dtype=np.float64)
    mean_path = sum(_path_length(t, x) for t in model.trees) / len(model.trees)
    return float(2.0 ** (-mean_path / _average_path_length(model.subsample)))


# --------------------------------------------------------------- ABOD

def abod_score(vectors: Sequence[Sequence[float]], v: Sequence[float]) -> float:
    """Angle-based outlier score: negated variance of weighted cosines.

    Low angle variance means the reference cloud is seen under a narrow cone,
    i.e. v sits outside it; the sign flip makes higher = more anomalous.
    Reference points coinciding with v are skipped.
    """
    refs = np.asarray(vectors, dtype=np.float64)
    point = np.asarray(v, dtype=np.float64)
    diffs = refs - point
    sq_norms = np.sum(diffs * diffs, axis=1)
    keep = sq_norms > 1e-24
    diffs = diffs[keep]
    sq_norms = sq_norms[keep]
    if diffs.shape[0] < 2:
        raise DataError("abod_score needs at least 2 non-coincident reference vectors")
    gram = diffs @ diffs.T
    weighted = gram / np.outer(sq_norms, sq_norms)
    iu = np.triu_indices(diffs.shape[0], k=1)
    values = weighted[iu]
    return float(-np.var(values))


# ----------------------------------------------------- decision rule

def threshold_by_contamination(scores: Sequence[float], contamination: float) -> float:
    """(1 - contamination) quantile of training scores; flag score > threshold."""
    if not 0.0 < contamination <= 0.5:
        raise DataError("contamination must be in (0, 0.5]")
    arr = np.asarray(scores, dtype=np.float64)
    if arr.size == 0:
        raise DataError("threshold_by_contamination needs scores")
    return float(np.quantile(arr, 1.0 - contamination))


ALGORITHMS = ("kde", "iforest", "abod")


@dataclass(frozen=True)
class OutlierDetector:
    """A fitted scorer plus its contamination-derived decision threshold."""

    algorithm: str
    contamination: float
    score_threshold: float
    kde: KdeModel | None = None
    iforest: IsolationForestModel | None = None
    references: np.ndarray | None = None  # abod

    def score(self, v: Sequence[float]) -> float:
        if self.algorithm == "kde":
            assert self.kde is not None
            return kde_score(self.kde, v)
        if self.algorithm == "iforest":
            assert self.iforest is not None
            return iforest_score(self.iforest, v)
        assert self.references is not None
        return abod_score(self.references, v)

    def predict(self, v: Sequence[float]) -> int:
        return 1 if self.score(v) > self.score_threshold else 0


def fit_outlier_detector(
    vectors: Sequence[Sequence[float]],
    algorithm: str,
    contamination: float = 0.1,
    seed: int = 0,
    n_trees: int = 100,
    subsample: int = 256,
) -> OutlierDetector:
    if algorithm not in ALGORITHMS:
        raise DataError(f"algorithm must be one of {ALGORITHMS}")
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataError("fit_outlier_detector needs at least 2 vectors")
    kde = iforest = None
    references = None
    if algorithm == "kde":
        kde = kde_fit(x)
        train_scores = [kde_score(kde, row) for row in x]
    elif algorithm == "iforest":
        iforest = iforest_fit(x, n_trees=n_trees, subsample=subsample, seed=seed)
        train_scores = [iforest_score(iforest, row) for row in x]
    else:
        references = x
        train_scores = [abod_score(x, row) for row in x]
    thr = threshold_by_contamination(train_scores, contamination)
    return OutlierDetector(algorithm, contamination, thr, kde, iforest, references)


def save_outlier_detector(det: OutlierDetector, path: str | Path) -> None:
    obj: dict = {
        "format": "gedkit.outlier",
        "version": 1,
        "algorithm": det.algorithm,
        "contamination": det.contamination,
        "score_threshold": det.score_threshold,
    }
    if det.kde is not None:
        obj["kde"] = {
            "points": det.kde.points.tolist(),
            "bandwidths": det.kde.bandwidths.tolist(),
        }
    if det.iforest is not None:
        obj["iforest"] = {"trees": det.iforest.trees, "subsample": det.iforest.subsample}
    if det.references is not None:
        obj["references"] = det.references.tolist()
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, separators=(",", ":"))
        fh.write("\n")


def load_outlier_detector(path: str | Path) -> OutlierDetector:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if obj.get("format") != "gedkit.outlier":
        raise DataError(f"{path}: not a gedkit.outlier file")
    kde = iforest = None
    references = None
    if "kde" in obj:
        kde = KdeModel(
            np.asarray(obj["kde"]["points"], dtype=np.float64),
            np.asarray(obj["kde"]["bandwidths"], dtype=np.float64),
        )
    if "iforest" in obj:
        iforest = IsolationForestModel(obj["iforest"]["trees"], int(obj["iforest"]["subsample"]))
    if "references" in obj:
        references = np.asarray(obj["references"], dtype=np.float64)
    return OutlierDetector(
        obj["algorithm"],
        float(obj["contamination"]),
        float(obj["score_threshold"]),
        kde,
        iforest,
        references,
    )
