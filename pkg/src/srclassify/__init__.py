"""Evolutionary symbolic-regression classification.

Three classifiers (GPLearnClf, CartesianClf, ClaSyCo) with a shared
fit/predict surface, a hyperparameter-search harness that can pick the best
classifier for a dataset, and a replicated benchmark protocol. The package is
exposed as a library, an HTTP service (``srclassify.service``), and a thin
command-line client (``srclassify.cli``).
"""

__version__ = "0.1.0"

from .classifiers import (
    CLASSIFIER_KINDS,
    ClassifierSpec,
    ClaSyCoModel,
    OvRModel,
    SavedModel,
    clasyco_fitness,
    fit_classifier,
    fit_clasyco,
    fit_ovr_cgp,
    fit_ovr_gp,
    predict,
    predict_proba,
)
from .data import (
    Dataset,
    ScalerParams,
    fit_scaler,
    load_csv,
    one_hot,
    parse_csv_text,
    train_test_split,
    transform_scaler,
)
from .hpo import (
    ParamSpec,
    Study,
    Trial,
    best_trial,
    classifier_search_space,
    run_study,
    suggest_random,
    suggest_tpe,
)
from .metrics import (
    argmax_tiebreak,
    balanced_accuracy,
    binary_cross_entropy,
    categorical_cross_entropy,
    sigmoid,
    softmax,
)

__all__ = [
    "CLASSIFIER_KINDS",
    "ClassifierSpec",
    "ClaSyCoModel",
    "Dataset",
    "OvRModel",
    "ParamSpec",
    "SavedModel",
    "ScalerParams",
    "Study",
    "Trial",
    "argmax_tiebreak",
    "balanced_accuracy",
    "best_trial",
    "binary_cross_entropy",
    "categorical_cross_entropy",
    "classifier_search_space",
    "clasyco_fitness",
    "fit_classifier",
    "fit_clasyco",
    "fit_ovr_cgp",
    "fit_ovr_gp",
    "fit_scaler",
    "load_csv",
    "one_hot",
    "parse_csv_text",
    "predict",
    "predict_proba",
    "run_study",
    "sigmoid",
    "softmax",
    "suggest_random",
    "suggest_tpe",
    "train_test_split",
    "transform_scaler",
]
