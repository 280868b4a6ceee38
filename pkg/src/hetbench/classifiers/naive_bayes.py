"""Gaussian naive Bayes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class GNBStats:
    priors: np.ndarray  # (C,)
    means: np.ndarray  # (C, d)
    variances: np.ndarray  # (C, d)


def gnb_fit_stats(X: np.ndarray, y: np.ndarray, n_classes: int, var_smoothing: float = 1e-9) -> GNBStats:
    """Class priors, means and (population) variances.

    Variances are floored at ``var_smoothing`` times the largest pooled
    feature variance. When every feature is constant the floor falls back to
    ``var_smoothing`` itself so densities stay finite.
    """
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    priors = np.zeros(n_classes)
    means = np.zeros((n_classes, d))
    variances = np.zeros((n_classes, d))
    for c in range(n_classes):
        rows = X[y == c]
        priors[c] = len(rows) / n
        means[c] = rows.mean(axis=0)
        variances[c] = ((rows - means[c]) ** 2).mean(axis=0)
    floor = var_smoothing * X.var(axis=0).max()
    if floor == 0:
        floor = var_smoothing
    return GNBStats(priors, means, np.maximum(variances, floor))


def log_posteriors(stats: GNBStats, X: np.ndarray) -> np.ndarray:
    """Unnormalised log posterior per (row, class)."""
    X = np.asarray(X, dtype=np.float64)
    diff = X[:, None, :] - stats.means[None, :, :]
    log_dens = -0.5 * (np.log(2 * np.pi * stats.variances)[None] + diff**2 / stats.variances[None])
    return np.log(stats.priors)[None, :] + log_dens.sum(axis=2)


def fit(config, X, y, n_classes):
    return gnb_fit_stats(X, y, n_classes, config.var_smoothing)


def predict(stats: GNBStats, config, Xs: np.ndarray) -> np.ndarray:
    return np.argmax(log_posteriors(stats, Xs), axis=1)
