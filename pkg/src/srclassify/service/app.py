"""HTTP service wrapping the core package.

Endpoints mirror the command-line surface: fit a single classifier, predict
with a saved model, run the replicated benchmark, and tally winners. Domain
errors (bad CSV, invalid hyperparameters, corrupt models, degenerate splits)
map to 400 responses with the error message in `detail`.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..classifiers import ModelFormatError, SavedModel
from ..data import parse_csv_text
from ..hpo import classifier_search_space
from ..protocol import (
    BenchmarkConfig,
    fit_dataset,
    format_tally_lines,
    parse_records_text,
    predict_dataset,
    records_to_text,
    run_benchmark,
    tally_records,
)
from . import schemas


def create_app() -> FastAPI:
    app = FastAPI(title="srclassify", version=__version__)

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.get("/search-space", response_model=list[schemas.ParamSpecModel])
    def search_space() -> list[schemas.ParamSpecModel]:
        return [
            schemas.ParamSpecModel(
                name=spec.name,
                kind=spec.kind,
                choices=list(spec.choices),
                low=spec.low,
                high=spec.high,
                log_scale=spec.log_scale,
                condition=spec.condition,
            )
            for spec in classifier_search_space()
        ]

    @app.post("/fit", response_model=schemas.FitResponse)
    def fit(req: schemas.FitRequest) -> schemas.FitResponse:
        try:
            dataset = parse_csv_text(req.csv_text, req.label_column)
            saved, train_acc, test_acc = fit_dataset(
                dataset,
                req.classifier.kind,
                req.classifier.hyperparams,
                req.seed,
                req.test_fraction,
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return schemas.FitResponse(
            model=saved.to_text(),
            train_balanced_accuracy=train_acc,
            test_balanced_accuracy=test_acc,
        )

    @app.post("/predict", response_model=schemas.PredictResponse)
    def predict(req: schemas.PredictRequest) -> schemas.PredictResponse:
        try:
            saved = SavedModel.from_text(req.model)
            columns, rows = _parse_feature_rows(req.csv_text)
            labels = predict_dataset(saved, columns, rows)
        except (ModelFormatError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return schemas.PredictResponse(labels=labels)

    @app.post("/benchmark", response_model=schemas.BenchmarkResponse)
    def benchmark(req: schemas.BenchmarkRequest) -> schemas.BenchmarkResponse:
        log_lines: list[str] = []
        try:
            config = BenchmarkConfig(
                n_replicates=req.n_replicates,
                n_trials=req.n_trials,
                sampler=req.sampler,
                base_seed=req.base_seed,
                test_fraction=req.test_fraction,
                time_budget_s=req.time_budget_s,
                classifiers=tuple(req.classifiers),
            )
            named = [
                (d.dataset_id, parse_csv_text(d.csv_text, d.label_column)) for d in req.datasets
            ]
            if not named:
                raise ValueError("benchmark request names no datasets")
            records = run_benchmark(named, config, log=log_lines.append)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return schemas.BenchmarkResponse(
            records=[
                schemas.RecordModel(
                    dataset_id=r.dataset_id,
                    replicate=r.replicate,
                    status=r.status,
                    winner=r.winner,
                    accuracy=r.accuracy,
                    params=r.params,
                    wall_time_s=r.wall_time_s,
                )
                for r in records
            ],
            records_text=records_to_text(records),
            log=log_lines,
        )

    @app.post("/tally", response_model=schemas.TallyResponse)
    def tally(req: schemas.TallyRequest) -> schemas.TallyResponse:
        try:
            entries = tally_records(parse_records_text(req.records_text))
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return schemas.TallyResponse(
            entries=[
                schemas.TallyEntryModel(
                    classifier=e.classifier, wins=e.wins, total=e.total, percentage=e.percentage
                )
                for e in entries
            ],
            lines=format_tally_lines(entries),
        )

    return app


def _parse_feature_rows(csv_text: str):
    """Header plus float-where-possible cell matrix for prediction requests."""
    import csv as _csv
    import io

    import numpy as np

    rows = [r for r in _csv.reader(io.StringIO(csv_text)) if r and any(c.strip() for c in r)]
    if len(rows) < 2:
        raise ValueError("prediction CSV needs a header row and at least one data row")
    header = [h.strip() for h in rows[0]]
    width = len(header)
    values = np.zeros((len(rows) - 1, width), dtype=np.float64)
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise ValueError(f"row {i} has {len(row)} cells, expected {width}")
        for j, cell in enumerate(row):
            try:
                values[i - 2, j] = float(cell.strip())
            except ValueError:
                values[i - 2, j] = np.nan  # non-numeric columns may be dropped later
    return header, values


app = create_app()
