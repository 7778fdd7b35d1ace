"""The experimental protocol: single-model fit/predict pipelines, replicated
benchmark runs with classifier-as-hyperparameter search, and win tallies.

Each replicate splits its dataset 80/20, fits the scaler on the training
side only, and runs a study whose objective fits the suggested classifier on
the scaled training set and returns balanced accuracy on the scaled test set
(scored directly on the test split; there is no third fold). The records
file is tab-separated with one replicate per line in a fixed field order;
wall-clock timings go to the log stream so records are byte-reproducible.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field

import numpy as np

from .classifiers import (
    CLASSIFIER_KINDS,
    SavedModel,
    fit_classifier,
    predict,
    validate_hyperparams,
)
from .data import (
    Dataset,
    DegenerateSplitError,
    fit_scaler,
    train_test_split,
    transform_scaler,
)
from .hpo import best_trial, classifier_search_space, format_params, run_study, split_classifier_params
from .metrics import balanced_accuracy

RECORD_FIELDS = ("dataset_id", "replicate", "status", "winner", "accuracy", "params")

_MISSING = "-"


def fit_dataset(
    dataset: Dataset,
    kind: str,
    hyperparams: dict,
    seed: int,
    test_fraction: float = 0.2,
) -> tuple[SavedModel, float, float]:
    """Split, scale, fit; returns the saved model plus train/test balanced accuracy."""
    hp = validate_hyperparams(kind, hyperparams)
    rng = np.random.default_rng(seed)
    train, test = train_test_split(dataset, rng, test_fraction)
    scaler = fit_scaler(train.X)
    X_train = transform_scaler(scaler, train.X)
    X_test = transform_scaler(scaler, test.X)
    model = fit_classifier(kind, hp, X_train, train.y, rng)
    train_acc = balanced_accuracy(train.y, predict(model, X_train))
    test_acc = balanced_accuracy(test.y, predict(model, X_test))
    saved = SavedModel(
        kind=kind,
        class_labels=tuple(dataset.class_labels[i] for i in model.class_labels),
        hyperparams=hp,
        seed=seed,
        scaler=scaler,
        feature_names=dataset.feature_names,
        individuals=model.per_class_models,
        cgp_config=model.per_class_models[0].config if kind == "CartesianClf" else None,
    )
    return saved, train_acc, test_acc


def predict_dataset(saved: SavedModel, dataset_text_columns: list[str], rows: np.ndarray) -> list[str]:
    """Predict labels for raw feature rows given the CSV's column names.

    The columns must contain every feature the model was trained on (extra
    columns, such as the original label column, are ignored).
    """
    missing = [name for name in saved.feature_names if name not in dataset_text_columns]
    if missing:
        raise ValueError(
            f"data is missing model feature columns {missing}; model expects {list(saved.feature_names)}"
        )
    idx = [dataset_text_columns.index(name) for name in saved.feature_names]
    features = rows[:, idx]
    if not np.all(np.isfinite(features)):
        raise ValueError("non-numeric or non-finite value in a feature column")
    return saved.predict_labels(features)


@dataclass(frozen=True)
class BenchmarkConfig:
    n_replicates: int = 20
    n_trials: int = 100
    sampler: str = "tpe"
    base_seed: int = 0
    test_fraction: float = 0.2
    time_budget_s: float | None = None
    classifiers: tuple[str, ...] = CLASSIFIER_KINDS

    def __post_init__(self):
        if self.n_replicates < 1 or self.n_trials < 1:
            raise ValueError("n_replicates and n_trials must be >= 1")
        if self.sampler not in ("random", "tpe"):
            raise ValueError(f"unknown sampler {self.sampler!r}")
        unknown = [k for k in self.classifiers if k not in CLASSIFIER_KINDS]
        if unknown or not self.classifiers:
            raise ValueError(f"classifiers must be a nonempty subset of {CLASSIFIER_KINDS}")


@dataclass(frozen=True)
class ReplicateRecord:
    dataset_id: str
    replicate: int
    status: str  # "ok" | "failed"
    winner: str | None = None
    accuracy: float | None = None
    params: dict | None = None
    wall_time_s: float = field(default=0.0, compare=False)


def _params_seed(key: tuple) -> int:
    digest = hashlib.sha256(repr(key).encode()).digest()
    return int.from_bytes(digest[:8], "big")


def run_replicate(
    dataset_id: str, dataset: Dataset, replicate: int, config: BenchmarkConfig
) -> ReplicateRecord:
    """One protocol replicate: split, scale, search, record the best trial.

    The fit seed for a trial is derived from the replicate seed and the
    sampled parameters, so repeated parameter suggestions within a replicate
    reuse the identical (cached) evaluation.
    """
    started = time.perf_counter()
    seed = config.base_seed + replicate
    try:
        train, test = train_test_split(
            dataset, np.random.default_rng([seed, 1]), config.test_fraction
        )
    except DegenerateSplitError:
        return ReplicateRecord(dataset_id, replicate, "failed", wall_time_s=time.perf_counter() - started)

    scaler = fit_scaler(train.X)
    X_train = transform_scaler(scaler, train.X)
    X_test = transform_scaler(scaler, test.X)
    space = classifier_search_space(config.classifiers)
    cache: dict[tuple, float] = {}

    def objective(params: dict) -> float:
        key = tuple(sorted(params.items()))
        hit = cache.get(key)
        if hit is not None:
            return hit
        kind, hyperparams = split_classifier_params(params)
        fit_rng = np.random.default_rng([seed, 2, _params_seed(key)])
        model = fit_classifier(kind, hyperparams, X_train, train.y, fit_rng)
        score = balanced_accuracy(test.y, predict(model, X_test))
        cache[key] = score
        return score

    try:
        study = run_study(space, objective, config.n_trials, config.sampler, seed)
    except RuntimeError:
        return ReplicateRecord(dataset_id, replicate, "failed", wall_time_s=time.perf_counter() - started)
    best = best_trial(study)
    return ReplicateRecord(
        dataset_id,
        replicate,
        "ok",
        winner=best.params["classifier"],
        accuracy=best.score,
        params=dict(best.params),
        wall_time_s=time.perf_counter() - started,
    )


def run_benchmark(
    named_datasets: list[tuple[str, Dataset]],
    config: BenchmarkConfig,
    log=None,
) -> list[ReplicateRecord]:
    """Run every (dataset, replicate) cell; replicate r uses seed base_seed + r.

    With a time budget, a dataset's remaining replicates are skipped once the
    budget is exhausted (the running replicate always finishes).
    """
    log = log or (lambda line: None)
    records: list[ReplicateRecord] = []
    for dataset_id, dataset in named_datasets:
        dataset_started = time.perf_counter()
        for r in range(config.n_replicates):
            if (
                config.time_budget_s is not None
                and time.perf_counter() - dataset_started > config.time_budget_s
            ):
                log(f"{dataset_id}: time budget exhausted, skipping replicates {r}..{config.n_replicates - 1}")
                break
            record = run_replicate(dataset_id, dataset, r, config)
            records.append(record)
            if record.status == "ok":
                log(
                    f"{dataset_id} replicate {r}: {record.winner} "
                    f"acc={record.accuracy:.4f} ({record.wall_time_s:.1f}s)"
                )
            else:
                log(f"{dataset_id} replicate {r}: failed ({record.wall_time_s:.1f}s)")
    return records


def records_to_text(records: list[ReplicateRecord]) -> str:
    """Canonical tab-separated rendering, one record per line.

    Field order: dataset_id, replicate, status, winner, accuracy, params.
    Timing is deliberately not serialized so equal seeds give equal bytes.
    """
    lines = []
    for r in records:
        if r.status == "ok":
            cells = (
                r.dataset_id,
                str(r.replicate),
                r.status,
                r.winner,
                repr(float(r.accuracy)),
                format_params(r.params),
            )
        else:
            cells = (r.dataset_id, str(r.replicate), r.status, _MISSING, _MISSING, _MISSING)
        lines.append("\t".join(cells))
    return "\n".join(lines) + ("\n" if lines else "")


def parse_records_text(text: str) -> list[ReplicateRecord]:
    records = []
    for ln, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        cells = line.split("\t")
        if len(cells) != len(RECORD_FIELDS):
            raise ValueError(f"records line {ln}: expected {len(RECORD_FIELDS)} fields, got {len(cells)}")
        dataset_id, replicate, status, winner, accuracy, params = cells
        if status == "ok":
            records.append(
                ReplicateRecord(
                    dataset_id,
                    int(replicate),
                    status,
                    winner=winner,
                    accuracy=float(accuracy),
                    params=None if params == _MISSING else eval_params(params),
                )
            )
        elif status == "failed":
            records.append(ReplicateRecord(dataset_id, int(replicate), status))
        else:
            raise ValueError(f"records line {ln}: unknown status {status!r}")
    return records


def eval_params(rendered: str) -> dict:
    """Parse the rendered params dict (string and integer literals only)."""
    import ast

    value = ast.literal_eval(rendered)
    if not isinstance(value, dict):
        raise ValueError(f"expected a params dict, got {type(value).__name__}")
    return value


@dataclass(frozen=True)
class TallyEntry:
    classifier: str
    wins: int
    total: int

    @property
    def percentage(self) -> float:
        return 100.0 * self.wins / self.total


def tally_records(records: list[ReplicateRecord]) -> list[TallyEntry]:
    """Win counts over successful records, highest percentage first."""
    ok = [r for r in records if r.status == "ok"]
    if not ok:
        raise ValueError("no successful records to tally")
    counts: dict[str, int] = {}
    for r in ok:
        counts[r.winner] = counts.get(r.winner, 0) + 1
    entries = [TallyEntry(name, wins, len(ok)) for name, wins in counts.items()]
    entries.sort(key=lambda e: (-e.percentage, e.classifier))
    return entries


def format_tally_lines(entries: list[TallyEntry]) -> list[str]:
    return [f"{e.classifier} -- {e.percentage:.2f}% wins" for e in entries]


@dataclass(frozen=True)
class BenchmarkFileConfig:
    """Parsed benchmark config file: dataset references plus protocol settings."""

    datasets: tuple[tuple[str, str], ...]  # (path, label_column)
    config: BenchmarkConfig
    records_out: str | None = None


def parse_benchmark_config_text(text: str) -> BenchmarkFileConfig:
    """Parse the flat key-value config format.

    Lines are ``key = value``; ``#`` starts a comment. The ``dataset`` key
    repeats, one ``path : label_column`` pair per line. Remaining keys:
    n_replicates, n_trials, sampler, base_seed, test_fraction, time_budget_s,
    classifiers (comma-separated), records (output path).
    """
    datasets: list[tuple[str, str]] = []
    settings: dict = {}
    records_out = None
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {ln}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "dataset":
            if ":" not in value:
                raise ValueError(f"config line {ln}: dataset needs 'path : label_column'")
            path, label = (part.strip() for part in value.rsplit(":", 1))
            datasets.append((path, label))
        elif key == "records":
            records_out = value
        elif key in ("n_replicates", "n_trials", "base_seed"):
            settings[key] = int(value)
        elif key in ("test_fraction", "time_budget_s"):
            settings[key] = float(value)
        elif key == "sampler":
            settings[key] = value
        elif key == "classifiers":
            settings[key] = tuple(part.strip() for part in value.split(",") if part.strip())
        else:
            raise ValueError(f"config line {ln}: unknown key {key!r}")
    if not datasets:
        raise ValueError("config names no datasets")
    return BenchmarkFileConfig(tuple(datasets), BenchmarkConfig(**settings), records_out)


def dataset_id_for(path: str, taken: set[str]) -> str:
    """Stable dataset id: the file stem, suffixed on collision."""
    from pathlib import Path

    stem = Path(path).stem or "dataset"
    candidate = stem
    k = 2
    while candidate in taken:
        candidate = f"{stem}-{k}"
        k += 1
    taken.add(candidate)
    return candidate
