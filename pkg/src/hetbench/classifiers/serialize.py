"""Versioned JSON documents for fitted models."""
from __future__ import annotations

import json

import numpy as np

from .base import Scaler, TrainedModel, config_from_dict, config_to_dict
from .forest import Forest, Tree
from .knn import KNNState
from .logistic import LRWeights
from .naive_bayes import GNBStats
from .svm import SVMWeights

FORMAT = "hetbench-model"
VERSION = 1

_TREE_FIELDS = ("feature", "threshold", "left", "right", "label", "depth")


def _state_to_dict(algorithm: str, state) -> dict:
    if algorithm == "knn":
        return {"X": state.X.tolist(), "y": state.y.tolist(), "n_classes": state.n_classes}
    if algorithm == "gnb":
        return {"priors": state.priors.tolist(), "means": state.means.tolist(), "variances": state.variances.tolist()}
    if algorithm == "lr":
        return {"W": state.W.tolist(), "b": state.b.tolist()}
    if algorithm == "svm":
        return {"W": state.W.tolist()}
    if algorithm == "rf":
        return {
            "n_classes": state.n_classes,
            "trees": [{name: getattr(t, name).tolist() for name in _TREE_FIELDS} for t in state.trees],
        }
    raise ValueError(f"unknown algorithm {algorithm!r}")


def _state_from_dict(algorithm: str, d: dict):
    arr = np.asarray
    if algorithm == "knn":
        return KNNState(arr(d["X"], dtype=float).reshape(len(d["y"]), -1), arr(d["y"], dtype=np.int64), d["n_classes"])
    if algorithm == "gnb":
        return GNBStats(arr(d["priors"], dtype=float), arr(d["means"], dtype=float), arr(d["variances"], dtype=float))
    if algorithm == "lr":
        return LRWeights(arr(d["W"], dtype=float), arr(d["b"], dtype=float))
    if algorithm == "svm":
        return SVMWeights(arr(d["W"], dtype=float))
    if algorithm == "rf":
        trees = []
        for t in d["trees"]:
            trees.append(Tree(*(arr(t[name], dtype=float if name == "threshold" else np.int64) for name in _TREE_FIELDS)))
        return Forest(tuple(trees), d["n_classes"])
    raise ValueError(f"unknown algorithm {algorithm!r}")


def model_to_dict(model: TrainedModel) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "algorithm": model.algorithm,
        "config": config_to_dict(model.config),
        "classes": list(model.classes),
        "scaler": {"mode": model.scaler.mode, "offset": model.scaler.offset.tolist(), "scale": model.scaler.scale.tolist()},
        "state": _state_to_dict(model.algorithm, model.state),
    }


def model_from_dict(doc: dict) -> TrainedModel:
    if doc.get("format") != FORMAT:
        raise ValueError("not a hetbench model document")
    if doc.get("version") != VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')!r}")
    sc = doc["scaler"]
    scaler = Scaler(sc["mode"], np.asarray(sc["offset"], dtype=float), np.asarray(sc["scale"], dtype=float))
    return TrainedModel(
        doc["algorithm"],
        config_from_dict(doc["config"]),
        tuple(int(c) for c in doc["classes"]),
        scaler,
        _state_from_dict(doc["algorithm"], doc["state"]),
    )


def dumps(model: TrainedModel) -> str:
    return json.dumps(model_to_dict(model), sort_keys=True)


def loads(text: str) -> TrainedModel:
    return model_from_dict(json.loads(text))
