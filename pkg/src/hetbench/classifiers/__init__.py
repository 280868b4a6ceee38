"""Five from-scratch classifiers behind one ``fit`` / ``predict`` surface."""
from __future__ import annotations

import numpy as np

from ..datagen import Dataset, FeatureVector, Label
from . import forest, knn, logistic, naive_bayes, svm
from .base import (
    ALGORITHMS,
    AlgorithmConfig,
    GaussianNBConfig,
    KNNConfig,
    LinearSVMConfig,
    LogisticRegressionConfig,
    RandomForestConfig,
    Scaler,
    TrainedModel,
    TrainingError,
    class_order,
    config_from_dict,
    config_to_dict,
    default_config,
    encode,
)

# algorithm -> (implementation module, scaler mode)
_BACKENDS = {
    "knn": (knn, "minmax"),
    "gnb": (naive_bayes, "identity"),
    "lr": (logistic, "zscore"),
    "svm": (svm, "zscore"),
    "rf": (forest, "identity"),
}


def fit_arrays(config: AlgorithmConfig, X, labels) -> TrainedModel:
    """Fit on raw feature rows ``X`` (n, d) and integer labels."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) == 0:
        raise TrainingError("cannot fit on an empty training set")
    backend, mode = _BACKENDS[config.name]
    classes = class_order(labels)
    scaler = Scaler.fit(X, mode)
    state = backend.fit(config, scaler.transform(X), encode(labels, classes), len(classes))
    return TrainedModel(config.name, config, classes, scaler, state)


def fit(config: AlgorithmConfig, train: Dataset) -> TrainedModel:
    return fit_arrays(config, train.features, train.labels)


def predict_indices(model: TrainedModel, X) -> np.ndarray:
    """Position of the predicted class in ``model.classes`` for each row."""
    backend, _ = _BACKENDS[model.algorithm]
    Xs = model.scaler.transform(np.atleast_2d(np.asarray(X, dtype=np.float64)))
    return backend.predict(model.state, model.config, Xs)


def predict_many(model: TrainedModel, X) -> np.ndarray:
    return np.asarray(model.classes, dtype=np.int64)[predict_indices(model, X)]


def predict(model: TrainedModel, f: FeatureVector) -> Label:
    return Label(int(predict_many(model, [tuple(f)])[0]))


def accuracy(model: TrainedModel, data: Dataset) -> float:
    return float(np.mean(predict_many(model, data.features) == data.labels))


__all__ = [
    "ALGORITHMS",
    "AlgorithmConfig",
    "GaussianNBConfig",
    "KNNConfig",
    "LinearSVMConfig",
    "LogisticRegressionConfig",
    "RandomForestConfig",
    "Scaler",
    "TrainedModel",
    "TrainingError",
    "accuracy",
    "config_from_dict",
    "config_to_dict",
    "default_config",
    "fit",
    "fit_arrays",
    "predict",
    "predict_indices",
    "predict_many",
]
