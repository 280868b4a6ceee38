"""Multinomial (softmax) logistic regression by full-batch gradient descent."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import TrainingError


@dataclass(frozen=True, eq=False)
class LRWeights:
    W: np.ndarray  # (d, C)
    b: np.ndarray  # (C,)


def softmax(scores):
    """Row-wise softmax with max subtraction. Accepts a vector or a matrix."""
    z = np.asarray(scores, dtype=np.float64)
    if z.size == 0:
        raise ValueError("softmax of an empty sequence")
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def loss_and_grad(weights: LRWeights, X: np.ndarray, Y: np.ndarray, l2: float):
    """Mean cross-entropy plus ``l2/2 * ||W||^2`` and its gradient.

    ``Y`` is one-hot, shape (n, C). The bias is not penalised.
    """
    n = len(X)
    logits = X @ weights.W + weights.b
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_p = shifted - log_norm
    loss = -(Y * log_p).sum() / n + 0.5 * l2 * float((weights.W**2).sum())
    residual = (np.exp(log_p) - Y) / n
    grad_W = X.T @ residual + l2 * weights.W
    grad_b = residual.sum(axis=0)
    return loss, grad_W, grad_b


def lr_train_step(weights: LRWeights, X, Y, learning_rate: float, l2: float) -> tuple[LRWeights, float]:
    """One gradient step. Returns the new weights and the loss *before* the step."""
    loss, grad_W, grad_b = loss_and_grad(weights, X, Y, l2)
    if not np.isfinite(loss):
        raise TrainingError(f"logistic regression loss became non-finite ({loss})")
    return LRWeights(weights.W - learning_rate * grad_W, weights.b - learning_rate * grad_b), loss


def train(X, y, n_classes, learning_rate, l2, max_iter, tol, history=None) -> LRWeights:
    X = np.asarray(X, dtype=np.float64)
    Y = np.eye(n_classes)[y]
    weights = LRWeights(np.zeros((X.shape[1], n_classes)), np.zeros(n_classes))
    prev = np.inf
    for _ in range(max_iter):
        new, loss = lr_train_step(weights, X, Y, learning_rate, l2)
        if history is not None:
            history.append(loss)
        if prev - loss < tol:
            break
        weights, prev = new, loss
    return weights


def fit(config, X, y, n_classes):
    return train(X, y, n_classes, config.learning_rate, config.l2, config.max_iter, config.tol)


def predict(weights: LRWeights, config, Xs: np.ndarray) -> np.ndarray:
    return np.argmax(Xs @ weights.W + weights.b, axis=1)
