"""Single-feature threshold detector tuned by quantile grid search on F0.5."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..errors import DataError
from ..evaluate import confusion, f_beta
from ..metrics import FEATURE_KEYS

DIRECTIONS = ("flag_below", "flag_above")


@dataclass(frozen=True)
class ThresholdDetector:
    feature_name: str
    direction: str  # flag_below | flag_above
    threshold: float

    def __post_init__(self) -> None:
        if self.feature_name not in FEATURE_KEYS:
            raise DataError(f"unknown feature name: {self.feature_name!r}")
        if self.direction not in DIRECTIONS:
            raise DataError(f"direction must be one of {DIRECTIONS}")

    def predict(self, rows: Sequence[Mapping[str, float]]) -> list[int]:
        values = [float(r[self.feature_name]) for r in rows]
        if self.direction == "flag_below":
            return [1 if v <= self.threshold else 0 for v in values]
        return [1 if v >= self.threshold else 0 for v in values]


def grid_search_threshold(
    rows: Sequence[Mapping[str, float]],
    labels: Sequence[int],
    feature_name: str,
    direction: str,
    grid: int = 100,
) -> tuple[ThresholdDetector, list[tuple[float, float]]]:
    """Pick the F0.5-maximizing threshold over evenly spaced quantiles.

    Returns the detector and the full (threshold, F0.5) curve; ties go to the
    smallest threshold.
    """
    if feature_name not in FEATURE_KEYS:
        raise DataError(f"unknown feature name: {feature_name!r}")
    if len(rows) != len(labels):
        raise ValueError("rows and labels length mismatch")
    if len(set(labels)) < 2:
        raise DataError("grid search needs both classes present")
    if grid < 1:
        raise ValueError("grid must be >= 1")
    values = np.array([float(r[feature_name]) for r in rows])
    levels = np.linspace(0.0, 1.0, grid) if grid > 1 else np.array([0.5])
    thresholds = np.quantile(values, levels)

    curve: list[tuple[float, float]] = []
    best: tuple[float, float] | None = None
    for t in thresholds:
        if direction == "flag_below":
            preds = (values <= t).astype(int)
        else:
            preds = (values >= t).astype(int)
        c = confusion(preds.tolist(), list(labels))
        score = f_beta(c.precision, c.recall)
        curve.append((float(t), score))
        if best is None or score > best[1]:
            best = (float(t), score)
    assert best is not None
    return ThresholdDetector(feature_name, direction, best[0]), curve
