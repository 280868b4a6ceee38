"""One-vs-rest linear SVM trained by Pegasos stochastic subgradient steps.

Each class gets a weight vector over the standardized features plus a
constant bias column (the bias is regularized like every other weight).
Step size at global update ``t`` is ``1 / (lambda * t)``; ``t`` keeps
counting across epochs. Every epoch visits the rows in a fresh
Fisher-Yates order drawn from the ``shuffle_seed`` splitmix64 chain.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .base import TrainingError

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@dataclass(frozen=True, eq=False)
class SVMWeights:
    W: np.ndarray  # (C, d + 1); last column is the bias


@numba.njit(cache=True)
def _shuffle(state, n):
    """Fisher-Yates permutation of range(n); same stream as ``datagen.uniform_int``."""
    order = np.arange(n)
    for i in range(n - 1, 0, -1):
        state = state + _GAMMA
        z = state
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        z = z ^ (z >> np.uint64(31))
        span = np.uint64(i + 1)
        hi = (z >> np.uint64(32)) * span
        lo = (z & np.uint64(0xFFFFFFFF)) * span
        j = np.int64((hi + (lo >> np.uint64(32))) >> np.uint64(32))
        tmp = order[i]
        order[i] = order[j]
        order[j] = tmp
    return order, state


@numba.njit(cache=True)
def svm_epoch(W, X, T, order, lam, t):
    """One pass of Pegasos updates over rows ``order``; returns the next ``t``.

    ``W`` (C, d) is updated in place, ``X`` (n, d) already carries the bias
    column, ``T`` (n, C) holds the +-1 one-vs-rest targets.
    """
    n_classes, d = W.shape
    for r in order:
        eta = 1.0 / (lam * t)
        shrink = 1.0 - eta * lam
        for c in range(n_classes):
            margin = 0.0
            for j in range(d):
                margin += W[c, j] * X[r, j]
            margin *= T[r, c]
            for j in range(d):
                W[c, j] *= shrink
            if margin < 1.0:
                for j in range(d):
                    W[c, j] += eta * T[r, c] * X[r, j]
        t += 1
    return t


def augment(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return np.hstack([X, np.ones((len(X), 1))])


def train(X, y, n_classes, lam, epochs, shuffle_seed) -> SVMWeights:
    Xa = augment(X)
    T = np.where(np.arange(n_classes)[None, :] == np.asarray(y)[:, None], 1.0, -1.0)
    W = np.zeros((n_classes, Xa.shape[1]))
    state = np.uint64(shuffle_seed)
    t = 1
    for _ in range(epochs):
        order, state = _shuffle(np.uint64(state), len(Xa))
        t = svm_epoch(W, Xa, T, order, float(lam), t)
    if not np.all(np.isfinite(W)):
        raise TrainingError("SVM weights became non-finite")
    return SVMWeights(W)


def fit(config, X, y, n_classes):
    return train(X, y, n_classes, config.lambda_, config.epochs, config.shuffle_seed)


def decision_scores(weights: SVMWeights, Xs: np.ndarray) -> np.ndarray:
    return augment(Xs) @ weights.W.T


def predict(weights: SVMWeights, config, Xs: np.ndarray) -> np.ndarray:
    return np.argmax(decision_scores(weights, Xs), axis=1)
