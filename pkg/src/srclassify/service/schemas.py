"""Request/response models for the HTTP service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

ClassifierKind = Literal["GPLearnClf", "CartesianClf", "ClaSyCo"]


class HealthResponse(BaseModel):
    status: str
    version: str


class ClassifierSpecModel(BaseModel):
    kind: ClassifierKind
    hyperparams: dict[str, int]


class FitRequest(BaseModel):
    csv_text: str
    label_column: str
    classifier: ClassifierSpecModel
    seed: int = 0
    test_fraction: float = Field(default=0.2, gt=0.0, lt=1.0)


class FitResponse(BaseModel):
    model: str  # serialized model file content
    train_balanced_accuracy: float
    test_balanced_accuracy: float


class PredictRequest(BaseModel):
    model: str
    csv_text: str


class PredictResponse(BaseModel):
    labels: list[str]


class ParamSpecModel(BaseModel):
    name: str
    kind: Literal["categorical", "int", "float"]
    choices: list = []
    low: Optional[float] = None
    high: Optional[float] = None
    log_scale: bool = False
    condition: Optional[tuple[str, str]] = None


class BenchmarkDatasetIn(BaseModel):
    dataset_id: str
    csv_text: str
    label_column: str


class BenchmarkRequest(BaseModel):
    datasets: list[BenchmarkDatasetIn]
    n_replicates: int = Field(default=20, ge=1)
    n_trials: int = Field(default=100, ge=1)
    sampler: Literal["random", "tpe"] = "tpe"
    base_seed: int = 0
    test_fraction: float = Field(default=0.2, gt=0.0, lt=1.0)
    time_budget_s: Optional[float] = None
    classifiers: list[ClassifierKind] = ["GPLearnClf", "CartesianClf", "ClaSyCo"]


class RecordModel(BaseModel):
    dataset_id: str
    replicate: int
    status: Literal["ok", "failed"]
    winner: Optional[str] = None
    accuracy: Optional[float] = None
    params: Optional[dict] = None
    wall_time_s: float = 0.0


class BenchmarkResponse(BaseModel):
    records: list[RecordModel]
    records_text: str
    log: list[str]


class TallyRequest(BaseModel):
    records_text: str


class TallyEntryModel(BaseModel):
    classifier: str
    wins: int
    total: int
    percentage: float


class TallyResponse(BaseModel):
    entries: list[TallyEntryModel]
    lines: list[str]
