"""Dataset ingestion and preprocessing: CSV loading, random train/test
splitting, standard scaling fitted on the training set, and one-hot encoding.

CSV contract: UTF-8, first row is a header, decimal-point reals, and one
column holds the class label (selected by name or zero-based index). Distinct
label values map to indices 0..C-1 in sorted order; when every label parses
as a number the sort is numeric, otherwise lexicographic.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np


class CsvParseError(ValueError):
    """Raised when a dataset file cannot be parsed."""


class DegenerateSplitError(ValueError):
    """Raised when a random split leaves the training set with fewer than
    two classes; callers may retry with a different seed."""


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]
    class_labels: tuple[str, ...]

    def __post_init__(self):
        if self.X.ndim != 2:
            raise ValueError("X must be 2-d")
        if len(self.y) != self.X.shape[0]:
            raise ValueError("X and y row counts differ")
        if self.X.shape[0] < 2:
            raise ValueError("dataset needs at least 2 samples")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("X contains NaN or Inf")
        if len(self.y) and (self.y.min() < 0 or self.y.max() >= len(self.class_labels)):
            raise ValueError("y values must index into class_labels")

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_labels)


@dataclass(frozen=True)
class ScalerParams:
    """Per-feature center and spread, fitted on training data only."""

    mean: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        if self.mean.shape != self.scale.shape:
            raise ValueError("mean and scale must have the same shape")
        if np.any(self.scale <= 0):
            raise ValueError("scale must be positive")


def _sort_labels(values: set[str]) -> list[str]:
    try:
        return sorted(values, key=float)
    except ValueError:
        return sorted(values)


def parse_csv_text(text: str, label_column: str | int) -> Dataset:
    """Parse CSV content into a Dataset. See the module docstring for the format."""
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise CsvParseError("empty CSV: no header row")
    header = [h.strip() for h in rows[0]]
    if isinstance(label_column, int) or (isinstance(label_column, str) and label_column not in header):
        try:
            label_idx = int(label_column)
        except (TypeError, ValueError):
            raise CsvParseError(f"label column {label_column!r} not found in header {header}")
        if not (0 <= label_idx < len(header)):
            raise CsvParseError(f"label column index {label_idx} out of range for {len(header)} columns")
    else:
        label_idx = header.index(label_column)

    feature_idx = [i for i in range(len(header)) if i != label_idx]
    if not feature_idx:
        raise CsvParseError("no feature columns besides the label column")
    if len(rows) < 3:
        raise CsvParseError("need at least 2 data rows")

    labels_raw: list[str] = []
    values = np.empty((len(rows) - 1, len(feature_idx)), dtype=np.float64)
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise CsvParseError(f"row {r} has {len(row)} cells, expected {len(header)}")
        labels_raw.append(row[label_idx].strip())
        for j, i in enumerate(feature_idx):
            cell = row[i].strip()
            try:
                v = float(cell)
            except ValueError:
                raise CsvParseError(
                    f"non-numeric value {cell!r} at row {r}, column {header[i]!r}"
                )
            if not np.isfinite(v):
                raise CsvParseError(f"non-finite value {cell!r} at row {r}, column {header[i]!r}")
            values[r - 2, j] = v

    class_labels = _sort_labels(set(labels_raw))
    index = {lab: k for k, lab in enumerate(class_labels)}
    y = np.array([index[lab] for lab in labels_raw], dtype=np.int64)
    feature_names = tuple(header[i] for i in feature_idx)
    return Dataset(values, y, feature_names, tuple(class_labels))


def load_csv(path, label_column: str | int) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return parse_csv_text(fh.read(), label_column)


def train_test_split(
    d: Dataset, rng: np.random.Generator, test_fraction: float = 0.2
) -> tuple[Dataset, Dataset]:
    """Uniform random partition; the test side gets round(test_fraction * n) rows."""
    if not (0 < test_fraction < 1):
        raise ValueError("test_fraction must lie strictly between 0 and 1")
    n = d.n_samples
    n_test = int(round(test_fraction * n))
    n_test = min(max(n_test, 1), n - 1)
    perm = rng.permutation(n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    train = Dataset(d.X[train_idx], d.y[train_idx], d.feature_names, d.class_labels)
    test = Dataset(d.X[test_idx], d.y[test_idx], d.feature_names, d.class_labels)
    if len(np.unique(train.y)) < 2:
        raise DegenerateSplitError(
            "degenerate split: training set holds fewer than 2 classes"
        )
    return train, test


def fit_scaler(X_train) -> ScalerParams:
    """Column means and population standard deviations; zero-variance columns
    get scale 1 so transformed constants map to 0."""
    X_train = np.asarray(X_train, dtype=np.float64)
    mean = X_train.mean(axis=0)
    scale = X_train.std(axis=0)
    scale = np.where(scale == 0.0, 1.0, scale)
    return ScalerParams(mean, scale)


def transform_scaler(params: ScalerParams, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.mean.shape[0]:
        raise ValueError(
            f"expected {params.mean.shape[0]} columns, got shape {X.shape}"
        )
    return (X - params.mean) / params.scale


def one_hot(y, n_classes: int) -> np.ndarray:
    y = np.asarray(y, dtype=np.int64)
    if y.size and (y.min() < 0 or y.max() >= n_classes):
        raise ValueError(f"labels must lie in [0, {n_classes})")
    out = np.zeros((len(y), n_classes), dtype=np.float64)
    out[np.arange(len(y)), y] = 1.0
    return out
