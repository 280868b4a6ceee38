"""Seeded splitting, confusion-matrix metrics and the benchmark report."""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import classifiers
from .classifiers import AlgorithmConfig, config_to_dict
from .datagen import Dataset, Label, N_CLASSES, uniform_int

CLASS_NAMES = tuple(label.spelling for label in Label)


@dataclass(frozen=True)
class SplitConfig:
    test_size: float = 0.5
    random_state: int = 3
    stratified: bool = False

    def __post_init__(self):
        if not 0.0 < self.test_size < 1.0:
            raise ValueError("test_size must lie strictly between 0 and 1")

    def to_dict(self) -> dict:
        return {"test_size": self.test_size, "random_state": self.random_state, "stratified": self.stratified}

    @classmethod
    def from_dict(cls, data: dict) -> "SplitConfig":
        for key in data:
            if key not in ("test_size", "random_state", "stratified"):
                raise ValueError(f"unknown SplitConfig key {key!r}")
        return cls(**data)


def fisher_yates(state: int, n: int) -> tuple[list[int], int]:
    order = list(range(n))
    for i in range(n - 1, 0, -1):
        j, state = uniform_int(state, 0, i)
        order[i], order[j] = order[j], order[i]
    return order, state


def n_test_rows(n: int, test_size: float) -> int:
    return max(1, math.floor(n * test_size))


def _split_positions(labels: np.ndarray, cfg: SplitConfig) -> tuple[np.ndarray, np.ndarray]:
    n = len(labels)
    if n < 2:
        raise ValueError("need at least 2 rows to split")
    is_test = np.zeros(n, dtype=bool)
    state = cfg.random_state
    if cfg.stratified:
        for c in range(N_CLASSES):
            members = np.flatnonzero(labels == c)
            order, state = fisher_yates(state, len(members))
            k = math.floor(len(members) * cfg.test_size)
            is_test[members[order[:k]]] = True
    else:
        order, state = fisher_yates(state, n)
        is_test[order[: n_test_rows(n, cfg.test_size)]] = True
    n_test = int(is_test.sum())
    if n_test == 0 or n_test == n:
        raise ValueError(f"test_size={cfg.test_size} leaves an empty train or test part for n={n}")
    return np.flatnonzero(~is_test), np.flatnonzero(is_test)


def train_test_split(data: Dataset, cfg: SplitConfig) -> tuple[Dataset, Dataset]:
    """Shuffle-based split; each part keeps the original row order."""
    train, test = _split_positions(data.labels, cfg)
    return data.subset(train), data.subset(test)


def three_way_split(data: Dataset, cfg: SplitConfig) -> tuple[Dataset, Dataset, Dataset]:
    """Train / validation / test.

    The held-out part of ``train_test_split`` is halved (again by shuffle):
    the first half becomes validation, the rest test. With the default
    ``test_size=0.5`` that gives a 0.5 / 0.25 / 0.25 split.
    """
    train, held = _split_positions(data.labels, cfg)
    if len(held) < 2:
        raise ValueError("held-out part too small for a validation/test split")
    order, _ = fisher_yates(cfg.random_state ^ 0x5EED, len(held))
    k = len(held) // 2
    val = np.sort(held[order[:k]])
    test = np.sort(held[order[k:]])
    return data.subset(train), data.subset(val), data.subset(test)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def _as_codes(labels) -> np.ndarray:
    if isinstance(labels, np.ndarray) and labels.dtype.kind in "iu":
        if labels.size and (labels.min() < 0 or labels.max() >= N_CLASSES):
            raise ValueError(f"unknown label value outside 0..{N_CLASSES - 1}")
        return labels.astype(np.int64, copy=False).reshape(-1)
    out = []
    for v in labels:
        if isinstance(v, str):
            v = Label.parse(v)
        v = int(v)
        if not 0 <= v < N_CLASSES:
            raise ValueError(f"unknown label value {v!r}")
        out.append(v)
    return np.asarray(out, dtype=np.int64)


def confusion_matrix(true_labels, predicted_labels) -> np.ndarray:
    """4x4 counts; rows are true classes, columns predictions, in Label order."""
    t = _as_codes(true_labels)
    p = _as_codes(predicted_labels)
    if len(t) != len(p):
        raise ValueError(f"length mismatch: {len(t)} true vs {len(p)} predicted labels")
    if len(t) == 0:
        raise ValueError("empty label sequences")
    return np.bincount(t * N_CLASSES + p, minlength=N_CLASSES * N_CLASSES).reshape(N_CLASSES, N_CLASSES)


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: tuple[float, ...]
    recall: tuple[float, ...]
    f1: tuple[float, ...]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    confusion: tuple[tuple[int, ...], ...]

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": dict(zip(CLASS_NAMES, self.precision)),
            "recall": dict(zip(CLASS_NAMES, self.recall)),
            "f1": dict(zip(CLASS_NAMES, self.f1)),
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "confusion": [list(r) for r in self.confusion],
        }


def metrics_from_confusion(confusion) -> Metrics:
    """Per-class and macro precision/recall/F1.

    Zero denominators give 0. Macro averages run over classes that occur in
    the true labels (nonzero row sum).
    """
    m = np.asarray(confusion, dtype=np.int64)
    if m.shape != (N_CLASSES, N_CLASSES) or (m < 0).any():
        raise ValueError("confusion must be a 4x4 nonnegative count matrix")
    total = int(m.sum())
    if total == 0:
        raise ValueError("confusion matrix is all zeros")
    diag = np.diag(m)
    rows, cols = m.sum(axis=1), m.sum(axis=0)
    precision = [diag[i] / cols[i] if cols[i] else 0.0 for i in range(N_CLASSES)]
    recall = [diag[i] / rows[i] if rows[i] else 0.0 for i in range(N_CLASSES)]
    f1 = [2 * p * r / (p + r) if p + r else 0.0 for p, r in zip(precision, recall)]
    present = [i for i in range(N_CLASSES) if rows[i]]
    macro = lambda xs: float(sum(xs[i] for i in present) / len(present))  # noqa: E731
    return Metrics(
        accuracy=int(diag.sum()) / total,
        precision=tuple(float(x) for x in precision),
        recall=tuple(float(x) for x in recall),
        f1=tuple(float(x) for x in f1),
        macro_precision=macro(precision),
        macro_recall=macro(recall),
        macro_f1=macro(f1),
        confusion=tuple(tuple(int(v) for v in r) for r in m),
    )


def evaluate(model, data: Dataset) -> Metrics:
    return metrics_from_confusion(confusion_matrix(data.labels, classifiers.predict_many(model, data.features)))


# ---------------------------------------------------------------------------
# Benchmark
# ---------------------------------------------------------------------------

@dataclass
class AlgorithmResult:
    algorithm: str
    config: dict
    train_score: Optional[float] = None
    test_score: Optional[float] = None
    best_accuracy: Optional[float] = None
    best_config: Optional[dict] = None
    metrics: Optional[Metrics] = None
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "config": self.config,
            "train_score": self.train_score,
            "test_score": self.test_score,
            "best_accuracy": self.best_accuracy,
            "best_config": self.best_config,
            "metrics": None if self.metrics is None else self.metrics.to_dict(),
            "error": self.error,
        }


@dataclass
class Report:
    results: list[AlgorithmResult]
    split: SplitConfig
    provenance: object = "external"
    tuning_mode: Optional[str] = None  # None: untuned; "paper" or "honest"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.results = sort_results(self.results)

    def result(self, algorithm: str) -> AlgorithmResult:
        for r in self.results:
            if r.algorithm == algorithm:
                return r
        raise KeyError(algorithm)

    def to_dict(self) -> dict:
        return {
            "provenance": self.provenance,
            "split": self.split.to_dict(),
            "tuning_mode": self.tuning_mode,
            "results": [r.to_dict() for r in self.results],
            **self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_markdown(self) -> str:
        lines = [
            "| algorithm | train set score | test set score | best prediction accuracy |",
            "|---|---|---|---|",
        ]
        for r in self.results:
            if r.failed:
                lines.append(f"| {r.algorithm} | failed | failed | failed |")
            else:
                lines.append(
                    f"| {r.algorithm} | {fmt_real(r.train_score)} | {fmt_real(r.test_score)} | {fmt_real(r.best_accuracy)} |"
                )
        return "\n".join(lines) + "\n"


def fmt_real(x: float) -> str:
    return f"{x:.6g}"


def sort_results(results: Sequence[AlgorithmResult]) -> list[AlgorithmResult]:
    return sorted(results, key=lambda r: (r.failed, -(r.test_score or 0.0), r.algorithm))


def run_one(config: AlgorithmConfig, train: Dataset, test: Dataset) -> AlgorithmResult:
    result = AlgorithmResult(config.name, config_to_dict(config))
    try:
        model = classifiers.fit(config, train)
        result.train_score = classifiers.accuracy(model, train)
        result.metrics = evaluate(model, test)
    except Exception as exc:  # one algorithm failing must not sink the run
        result.error = f"{type(exc).__name__}: {exc}"
        return result
    result.test_score = result.metrics.accuracy
    result.best_accuracy = result.test_score
    result.best_config = result.config
    return result


def map_ordered(fn, items, n_jobs: int = 1) -> list:
    """``[fn(x) for x in items]``, optionally on a thread pool; order preserved."""
    items = list(items)
    if n_jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, items))


def benchmark(data: Dataset, split: SplitConfig, configs: Sequence[AlgorithmConfig], n_jobs: int = 1) -> Report:
    """Fit every config on one shared split and score it on both parts."""
    if not configs:
        raise ValueError("benchmark needs at least one algorithm config")
    train, test = train_test_split(data, split)
    results = map_ordered(lambda c: run_one(c, train, test), configs, n_jobs)
    return Report(results, split, data.provenance_tag)
