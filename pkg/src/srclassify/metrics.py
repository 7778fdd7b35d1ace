"""Activations, losses, and evaluation metrics shared by all classifiers."""

from __future__ import annotations

import numpy as np

# Probabilities are clipped into [EPS, 1-EPS] before any logarithm.
EPS = 1e-15


def sigmoid(z):
    """Overflow-safe logistic function; accepts scalars or arrays."""
    z = np.asarray(z, dtype=np.float64)
    t = np.exp(-np.abs(z))
    out = np.where(z >= 0, 1.0 / (1.0 + t), t / (1.0 + t))
    return out if out.ndim else float(out)


def softmax(z) -> np.ndarray:
    """Max-subtracted softmax along the last axis."""
    z = np.asarray(z, dtype=np.float64)
    if z.size == 0:
        raise ValueError("softmax input must be nonempty")
    shifted = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def binary_cross_entropy(y, p, eps: float = EPS) -> float:
    """Mean of -(y*log(p) + (1-y)*log(1-p)) with p clipped to [eps, 1-eps]."""
    y = np.asarray(y, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if y.shape != p.shape:
        raise ValueError(f"shape mismatch: y{y.shape} vs p{p.shape}")
    if y.size == 0:
        raise ValueError("inputs must be nonempty")
    p = np.clip(p, eps, 1.0 - eps)
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log1p(-p))))


def categorical_cross_entropy(onehot_y, p, eps: float = EPS) -> float:
    """-log of the clipped probability assigned to the true class."""
    onehot_y = np.asarray(onehot_y, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if onehot_y.shape != p.shape:
        raise ValueError(f"shape mismatch: onehot{onehot_y.shape} vs p{p.shape}")
    ones = np.flatnonzero(onehot_y == 1.0)
    if len(ones) != 1 or not np.all((onehot_y == 0.0) | (onehot_y == 1.0)):
        raise ValueError("onehot_y must contain exactly one 1 and zeros elsewhere")
    p_true = np.clip(p[ones[0]], eps, 1.0 - eps)
    return float(-np.log(p_true))


def argmax_tiebreak(v) -> int:
    """Index of the maximum; ties resolve to the lowest index."""
    v = np.asarray(v)
    if v.size == 0:
        raise ValueError("argmax of an empty vector")
    return int(np.argmax(v))


def balanced_accuracy(y_true, y_pred) -> float:
    """Mean per-class recall over the classes present in y_true."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    if y_true.size == 0:
        raise ValueError("inputs must be nonempty")
    recalls = []
    for c in np.unique(y_true):
        mask = y_true == c
        recalls.append(float(np.mean(y_pred[mask] == c)))
    return float(np.mean(recalls))
