"""Anomaly detectors over text features and embedding vectors."""

from .classifier import (
    LogisticModel,
    classifier_fit,
    f05_metric,
    load_classifier,
    loss_and_grad,
    permutation_importance,
    save_classifier,
)
from .gmm import GmmModel, gmm_fit, gmm_log_density, load_gmm, save_gmm, surprisal_gap
from .outliers import (
    ALGORITHMS,
    IsolationForestModel,
    KdeModel,
    OutlierDetector,
    abod_score,
    fit_outlier_detector,
    iforest_fit,
    iforest_score,
    kde_fit,
    kde_log_density,
    kde_score,
    load_outlier_detector,
    save_outlier_detector,
    threshold_by_contamination,
)
from .threshold import ThresholdDetector, grid_search_threshold

__all__ = [
    "ALGORITHMS",
    "GmmModel",
    "IsolationForestModel",
    "KdeModel",
    "LogisticModel",
    "OutlierDetector",
    "ThresholdDetector",
    "abod_score",
    "classifier_fit",
    "f05_metric",
    "fit_outlier_detector",
    "gmm_fit",
    "gmm_log_density",
    "grid_search_threshold",
    "iforest_fit",
    "iforest_score",
    "kde_fit",
    "kde_log_density",
    "kde_score",
    "load_classifier",
    "load_gmm",
    "load_outlier_detector",
    "loss_and_grad",
    "permutation_importance",
    "save_classifier",
    "save_gmm",
    "save_outlier_detector",
    "surprisal_gap",
    "threshold_by_contamination",
]
