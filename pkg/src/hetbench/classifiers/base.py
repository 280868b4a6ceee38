"""Hyperparameter configs, feature scaling and the fitted-model container."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Any, ClassVar, Optional, Union

import numpy as np

from ..datagen import MASK64


class TrainingError(RuntimeError):
    """Raised when an optimizer diverges or training data is unusable."""


def _check_seed(value: int, name: str) -> None:
    if not 0 <= value <= MASK64:
        raise ValueError(f"{name} must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class KNNConfig:
    name: ClassVar[str] = "knn"
    k: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")


@dataclass(frozen=True)
class GaussianNBConfig:
    name: ClassVar[str] = "gnb"
    var_smoothing: float = 1e-9

    def __post_init__(self):
        if not self.var_smoothing > 0:
            raise ValueError("var_smoothing must be positive")


@dataclass(frozen=True)
class LogisticRegressionConfig:
    name: ClassVar[str] = "lr"
    learning_rate: float = 0.1
    l2: float = 1e-4
    max_iter: int = 1000
    tol: float = 1e-6

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.l2 < 0:
            raise ValueError("l2 must be nonnegative")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class LinearSVMConfig:
    name: ClassVar[str] = "svm"
    lambda_: float = 1e-3
    epochs: int = 50
    shuffle_seed: int = 3

    def __post_init__(self):
        if not self.lambda_ > 0:
            raise ValueError("lambda must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        _check_seed(self.shuffle_seed, "shuffle_seed")


@dataclass(frozen=True)
class RandomForestConfig:
    name: ClassVar[str] = "rf"
    n_estimators: int = 6
    max_depth: Optional[int] = None
    min_samples_split: int = 2
    features_per_split: int = 2
    rf_seed: int = 3
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be positive")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be positive or None")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if not 1 <= self.features_per_split <= 4:
            raise ValueError("features_per_split must lie in [1, 4]")
        _check_seed(self.rf_seed, "rf_seed")


AlgorithmConfig = Union[
    KNNConfig, GaussianNBConfig, LogisticRegressionConfig, LinearSVMConfig, RandomForestConfig
]

# Canonical algorithm listing order.
CONFIG_TYPES: dict[str, type] = {
    cls.name: cls
    for cls in (KNNConfig, LinearSVMConfig, LogisticRegressionConfig, GaussianNBConfig, RandomForestConfig)
}
ALGORITHMS = tuple(CONFIG_TYPES)


def default_config(algorithm: str) -> AlgorithmConfig:
    try:
        return CONFIG_TYPES[algorithm]()
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}") from None


def config_to_dict(config: AlgorithmConfig) -> dict[str, Any]:
    params = {("lambda" if k == "lambda_" else k): v for k, v in asdict(config).items()}
    return {"algorithm": config.name, **params}


def config_from_dict(data: dict[str, Any]) -> AlgorithmConfig:
    data = dict(data)
    algorithm = data.pop("algorithm", None)
    if algorithm not in CONFIG_TYPES:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    cls = CONFIG_TYPES[algorithm]
    known = {f.name for f in fields(cls)}
    params = {}
    for key, value in data.items():
        attr = "lambda_" if key == "lambda" else key
        if attr not in known:
            raise ValueError(f"unknown {algorithm} parameter {key!r}")
        params[attr] = value
    return cls(**params)


@dataclass(frozen=True, eq=False)
class Scaler:
    """Per-feature affine map ``(x - offset) / scale`` fitted on training rows."""

    mode: str
    offset: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray, mode: str) -> "Scaler":
        X = np.asarray(X, dtype=np.float64)
        d = X.shape[1]
        if mode == "identity":
            offset, scale = np.zeros(d), np.ones(d)
        elif mode == "minmax":
            offset = X.min(axis=0)
            scale = X.max(axis=0) - offset
        elif mode == "zscore":
            offset = X.mean(axis=0)
            scale = X.std(axis=0)
        else:
            raise ValueError(f"unknown scaler mode {mode!r}")
        scale = np.where(scale == 0, 1.0, scale)
        return cls(mode, offset, scale)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if self.mode == "identity":
            return X
        return (X - self.offset) / self.scale


@dataclass(frozen=True, eq=False)
class TrainedModel:
    algorithm: str
    config: AlgorithmConfig
    classes: tuple[int, ...]
    scaler: Scaler
    state: Any


def class_order(labels: np.ndarray) -> tuple[int, ...]:
    """Distinct labels in order of first appearance."""
    values, first = np.unique(labels, return_index=True)
    return tuple(int(v) for v in values[np.argsort(first)])


def encode(labels: np.ndarray, classes: tuple[int, ...]) -> np.ndarray:
    lookup = {c: i for i, c in enumerate(classes)}
    return np.fromiter((lookup[int(v)] for v in labels), dtype=np.int64, count=len(labels))


def first_argmax(scores: np.ndarray) -> np.ndarray:
    """Row-wise argmax; ties go to the lowest column (earliest class)."""
    return np.argmax(scores, axis=1)
