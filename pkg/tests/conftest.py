"""Shared test data builders."""

from __future__ import annotations

import numpy as np
import pytest

from srclassify.data import Dataset


def threshold_dataset(n: int = 100, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """1-feature dataset with y = 1 iff x0 > 0."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 1))
    y = (X[:, 0] > 0).astype(np.int64)
    return X, y


def blobs_dataset(n_per_class: int, seed: int = 0, spread: float = 0.45):
    """3-class 2-d Gaussian blobs with separated means."""
    rng = np.random.default_rng(seed)
    means = np.array([[0.0, 2.2], [-2.2, -1.2], [2.2, -1.2]])
    X = np.vstack([rng.normal(m, spread, size=(n_per_class, 2)) for m in means])
    y = np.repeat(np.arange(3), n_per_class)
    perm = rng.permutation(len(y))
    return X[perm], y[perm]


def dataset_to_csv(X: np.ndarray, labels, feature_names=None, label_name="label") -> str:
    feature_names = feature_names or [f"f{i}" for i in range(X.shape[1])]
    lines = [",".join([*feature_names, label_name])]
    for row, lab in zip(X, labels):
        lines.append(",".join([repr(float(v)) for v in row] + [str(lab)]))
    return "\n".join(lines) + "\n"


def toy_dataset(n: int = 40, seed: int = 5) -> Dataset:
    X, y = threshold_dataset(n, seed)
    return Dataset(X, y, ("f0",), ("0", "1"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
