"""Automated train -> test -> predict -> optimize loop and the sweep harness.

Two tuning modes:

``honest`` (default)
    configs are scored on a validation split; the winner is scored once on
    a separate test split.
``paper``
    configs are scored directly on the test split, the protocol that a
    "best prediction accuracy" column implies.
"""
from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import classifiers
from .classifiers import AlgorithmConfig, config_from_dict, config_to_dict, default_config
from .classifiers import knn as _knn
from .datagen import Dataset, GenConfig, generate_dataset
from .evaluation import (
    Report,
    SplitConfig,
    confusion_matrix,
    evaluate,
    fisher_yates,
    map_ordered,
    run_one,
    metrics_from_confusion,
    three_way_split,
    train_test_split,
)

IMPROVEMENT_EPS = 1e-9
MODES = ("honest", "paper")
OBJECTIVES = ("accuracy", "macro_f1")


@dataclass(frozen=True)
class SearchSpace:
    """Finite grid: an ordered mapping of parameter name -> candidate values."""

    algorithm: str
    params: dict

    def __post_init__(self):
        if not self.params or any(len(v) == 0 for v in self.params.values()):
            raise ValueError(f"empty search space for {self.algorithm}")
        base = config_to_dict(default_config(self.algorithm))
        for key in self.params:
            if key not in base:
                raise ValueError(f"unknown {self.algorithm} parameter {key!r}")

    def grid(self) -> list[AlgorithmConfig]:
        """Every config, lexicographic over the declared parameter order."""
        base = config_to_dict(default_config(self.algorithm))
        keys = list(self.params)
        return [
            config_from_dict({**base, **dict(zip(keys, combo))})
            for combo in itertools.product(*(self.params[k] for k in keys))
        ]

    def __contains__(self, config: AlgorithmConfig) -> bool:
        if config.name != self.algorithm:
            return False
        d = config_to_dict(config)
        base = config_to_dict(default_config(self.algorithm))
        return all(
            (d[k] in self.params[k]) if k in self.params else d[k] == base[k]
            for k in d
        )

    def to_dict(self) -> dict:
        return {"algorithm": self.algorithm, "params": {k: list(v) for k, v in self.params.items()}}


def default_space(algorithm: str) -> SearchSpace:
    if algorithm == "knn":
        params = {"k": list(range(1, 16))}
    elif algorithm == "rf":
        params = {"n_estimators": list(range(1, 21)), "max_depth": list(range(2, 17)) + [None]}
    elif algorithm == "lr":
        params = {"learning_rate": [0.01, 0.03, 0.1, 0.3], "l2": [0.0, 1e-4, 1e-2]}
    elif algorithm == "svm":
        params = {"lambda": [1e-4, 1e-3, 1e-2], "epochs": [20, 50, 100]}
    elif algorithm == "gnb":
        params = {"var_smoothing": [1e-12, 1e-9, 1e-6]}
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return SearchSpace(algorithm, params)


@dataclass
class Trial:
    index: int
    config: dict
    score: float
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {"index": self.index, "config": self.config, "score": self.score, "error": self.error}


@dataclass
class TuneResult:
    algorithm: str
    best_config: dict
    best_score: float
    trials: list[Trial]
    stop_reason: str  # "budget" or "converged"
    mode: str
    objective: str
    test_score: float
    test_metrics: Optional[object] = None
    extra: dict = field(default_factory=dict)

    def incumbent_scores(self) -> list[float]:
        return list(np.maximum.accumulate([t.score for t in self.trials]))

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "best_config": self.best_config,
            "best_score": self.best_score,
            "test_score": self.test_score,
            "test_metrics": None if self.test_metrics is None else self.test_metrics.to_dict(),
            "stop_reason": self.stop_reason,
            "mode": self.mode,
            "objective": self.objective,
            "trials": [t.to_dict() for t in self.trials],
        }


class TrialScorer:
    """Scores configs on one (train, eval) pair.

    Forests are grown once per family at the largest requested size with
    unbounded depth and then read back per (n_estimators, max_depth); KNN
    neighbour lists are ranked once for the largest k. Both shortcuts give
    exactly the predictions a fresh fit would (see ``classifiers.forest``).
    """

    def __init__(self, train: Dataset, evaluation: Dataset, objective: str = "accuracy", planned=()):
        if objective not in OBJECTIVES:
            raise ValueError(f"unknown objective {objective!r}")
        self.train = train
        self.evaluation = evaluation
        self.objective = objective
        self._lock = threading.Lock()
        self._cache: dict = {}
        self._family_size: dict = {}
        for config in planned:
            key = self._family(config)
            size = config.n_estimators if config.name == "rf" else getattr(config, "k", 0)
            self._family_size[key] = max(self._family_size.get(key, 0), size)

    @staticmethod
    def _family(config):
        d = config_to_dict(config)
        if config.name == "rf":
            d.pop("n_estimators"), d.pop("max_depth")
        elif config.name == "knn":
            d.pop("k")
        return tuple(sorted(d.items()))

    def _shared(self, key, build):
        with self._lock:
            entry = self._cache.get(key)
            if entry is None:
                entry = self._cache[key] = {"lock": threading.Lock(), "value": None}
        with entry["lock"]:
            if entry["value"] is None:
                entry["value"] = build()
            return entry["value"]

    def predictions(self, config: AlgorithmConfig) -> np.ndarray:
        if config.name == "rf":
            return self._rf_predictions(config)
        if config.name == "knn":
            return self._knn_predictions(config)
        model = classifiers.fit(config, self.train)
        return classifiers.predict_many(model, self.evaluation.features)

    def _rf_predictions(self, config):
        family = self._family(config)
        size = max(self._family_size.get(family, 0), config.n_estimators)

        def build():
            big = config_from_dict({**config_to_dict(config), "n_estimators": size, "max_depth": None})
            return classifiers.fit(big, self.train), {}

        model, per_tree = self._shared(("rf", family, size), build)
        n_classes = len(model.classes)
        votes = np.zeros((len(self.evaluation), n_classes), dtype=np.int64)
        rows = np.arange(len(self.evaluation))
        for i in range(config.n_estimators):
            key = (i, config.max_depth)
            with self._lock:
                pred = per_tree.get(key)
            if pred is None:
                pred = model.state.trees[i].apply(self.evaluation.features, config.max_depth)
                with self._lock:
                    per_tree[key] = pred
            votes[rows, pred] += 1
        return np.asarray(model.classes)[np.argmax(votes, axis=1)]

    def _knn_predictions(self, config):
        family = self._family(config)
        kmax = max(self._family_size.get(family, 0), config.k)

        def build():
            model = classifiers.fit(config, self.train)
            Xs = model.scaler.transform(self.evaluation.features)
            order = _knn.neighbor_order(model.state, Xs, kmax)
            return model, model.state.y[order]

        model, neighbor_labels = self._shared(("knn", family, kmax), build)
        idx = _knn.vote(neighbor_labels, config.k, model.state.n_classes)
        return np.asarray(model.classes)[idx]

    def score(self, config: AlgorithmConfig) -> float:
        pred = self.predictions(config)
        if self.objective == "accuracy":
            return float(np.mean(pred == self.evaluation.labels))
        return metrics_from_confusion(confusion_matrix(self.evaluation.labels, pred)).macro_f1


def _run_trial(scorer: TrialScorer, index: int, config: AlgorithmConfig) -> Trial:
    try:
        return Trial(index, config_to_dict(config), scorer.score(config))
    except Exception as exc:
        return Trial(index, config_to_dict(config), 0.0, f"{type(exc).__name__}: {exc}")


def optimize(
    algorithm: str,
    space: Optional[SearchSpace],
    data: Dataset,
    split: SplitConfig,
    budget: int,
    patience: int,
    strategy: str = "grid",
    seed: int = 0,
    mode: str = "honest",
    objective: str = "accuracy",
    n_jobs: int = 1,
) -> TuneResult:
    """Search ``space`` until ``budget`` trials or ``patience`` trials without gain.

    Grid order is lexicographic; the random strategy visits the grid in a
    seeded uniform random order (no repeats). Ties keep the earlier trial.
    """
    space = default_space(algorithm) if space is None else space
    if space.algorithm != algorithm:
        raise ValueError("search space belongs to a different algorithm")
    if budget < 1 or patience < 1:
        raise ValueError("budget and patience must be positive")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    configs = space.grid()
    if strategy == "random":
        order, _ = fisher_yates(seed, len(configs))
        configs = [configs[i] for i in order]
    elif strategy != "grid":
        raise ValueError(f"unknown strategy {strategy!r}")
    planned = configs[:budget]

    if mode == "paper":
        train, test = train_test_split(data, split)
        evaluation = test
    else:
        train, evaluation, test = three_way_split(data, split)
    scorer = TrialScorer(train, evaluation, objective, planned)

    trials: list[Trial] = []
    best: Optional[Trial] = None
    stale = 0
    stop_reason = "budget"

    def consume(trial: Trial) -> bool:
        nonlocal best, stale
        trials.append(trial)
        if best is None or trial.score > best.score + IMPROVEMENT_EPS:
            best, stale = trial, 0
        else:
            stale += 1
        return stale >= patience

    if n_jobs <= 1:
        for i, config in enumerate(planned):
            if consume(_run_trial(scorer, i, config)):
                stop_reason = "converged"
                break
    else:
        # Everything runs; the early-stopping rule is replayed in trial order
        # so the log does not depend on scheduling.
        done = map_ordered(lambda ic: _run_trial(scorer, *ic), list(enumerate(planned)), n_jobs)
        for trial in done:
            if consume(trial):
                stop_reason = "converged"
                break

    if best.error is not None:
        raise classifiers.TrainingError(f"every {algorithm} trial failed; first error: {trials[0].error}")
    best_config = config_from_dict(best.config)
    if mode == "paper":
        test_metrics = metrics_from_confusion(confusion_matrix(test.labels, scorer.predictions(best_config)))
    else:
        test_metrics = evaluate(classifiers.fit(best_config, train), test)
    return TuneResult(
        algorithm=algorithm,
        best_config=best.config,
        best_score=best.score,
        trials=trials,
        stop_reason=stop_reason,
        mode=mode,
        objective=objective,
        test_score=test_metrics.accuracy,
        test_metrics=test_metrics,
    )


def tuned_benchmark(
    data: Dataset,
    split: SplitConfig,
    algorithms: Sequence[str],
    spaces: Optional[dict] = None,
    mode: str = "honest",
    n_jobs: int = 1,
) -> Report:
    """Benchmark report: default-config train/test scores plus the
    accuracy of the exhaustively tuned config on the test split."""
    spaces = spaces or {}
    if mode == "paper":
        train, test = train_test_split(data, split)
    else:
        train, _, test = three_way_split(data, split)
    results = []
    for algorithm in algorithms:
        space = spaces.get(algorithm) or default_space(algorithm)
        size = len(space.grid())
        base = run_one(default_config(algorithm), train, test)
        if not base.failed:
            try:
                tuned = optimize(algorithm, space, data, split, size, size, mode=mode, n_jobs=n_jobs)
            except classifiers.TrainingError as exc:
                base.error = f"tuning failed: {exc}"
            else:
                base.best_accuracy = tuned.test_score
                base.best_config = tuned.best_config
                base.metrics = tuned.test_metrics
        results.append(base)
    return Report(results, split, data.provenance_tag, tuning_mode=mode)


@dataclass(frozen=True)
class SweepRow:
    key: float  # test_size or sample count
    algorithm: str
    train_score: Optional[float]
    test_score: Optional[float]


def split_ratio_sweep(
    data: Dataset,
    ratios: Sequence[float] = (0.05, 0.2, 0.5),
    configs: Optional[Sequence[AlgorithmConfig]] = None,
    random_state: int = 3,
    n_jobs: int = 1,
) -> list[SweepRow]:
    configs = list(configs) if configs else [default_config(a) for a in classifiers.ALGORITHMS]
    rows = []
    for ratio in ratios:
        rows.extend(_sweep_cell(ratio, data, SplitConfig(ratio, random_state), configs, n_jobs))
    return rows


def sample_size_sweep(
    gen_config: GenConfig,
    sizes: Sequence[int],
    split: SplitConfig = SplitConfig(),
    configs: Optional[Sequence[AlgorithmConfig]] = None,
    n_jobs: int = 1,
) -> list[SweepRow]:
    if not sizes:
        raise ValueError("sizes must be non-empty")
    for n in sizes:
        if n < 20:
            raise ValueError(f"sample size {n} is below the minimum of 20")
    configs = list(configs) if configs else [default_config(a) for a in classifiers.ALGORITHMS]
    rows = []
    for n in sizes:
        data = generate_dataset(gen_config.replace(n_samples=n))
        rows.extend(_sweep_cell(n, data, split, configs, n_jobs))
    return rows


def _sweep_cell(key, data, split, configs, n_jobs) -> list[SweepRow]:
    """Same numbers as ``benchmark`` but kept in config order."""
    train, test = train_test_split(data, split)
    results = map_ordered(lambda c: run_one(c, train, test), configs, n_jobs)
    return [SweepRow(key, r.algorithm, r.train_score, r.test_score) for r in results]
