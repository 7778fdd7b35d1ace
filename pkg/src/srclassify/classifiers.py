"""The three evolved classifiers behind a uniform fit/predict surface.

GPLearnClf evolves one tree population per class, each against the binary
cross-entropy of its sigmoid-squashed outputs versus that class's one-hot
column. CartesianClf does the same with (1+lambda) grid-genome evolution.
ClaSyCo evolves its tree populations in tandem: a candidate is scored by
assembling its raw outputs with the previous generation's best outputs from
every other population, taking a softmax across the class axis, and charging
categorical cross-entropy.

Prediction is the argmax of per-class scores (sigmoid scores renormalized per
row for the one-vs-rest models, softmax rows for ClaSyCo), with ties resolved
to the lowest class index.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .cgp import CgpConfig, CgpGenome, eval_genome
from .data import ScalerParams, one_hot, transform_scaler
from .evolution import (
    EvoConfig,
    EvolutionTrace,
    breed_tree_population,
    evolve_one_plus_lambda,
    evolve_tree_population,
)
from .metrics import EPS, sigmoid, softmax
from .trees import TreeInitConfig, eval_tree, eval_tree_cached, parse_tree, random_tree

CLASSIFIER_KINDS = ("GPLearnClf", "CartesianClf", "ClaSyCo")

MODEL_FORMAT = "srclassify-model/1"

DEFAULT_CGP_LAMBDA = 4

_TREE_HYPERPARAMS = {"n_pop": 2, "n_gens": 1}
_CGP_HYPERPARAMS = {"n_rows": 1, "n_columns": 1, "maxiter": 1}
_CGP_OPTIONAL = {"lambda": 1}


class ModelFormatError(ValueError):
    """Raised for unreadable or structurally invalid model files."""


def validate_hyperparams(kind: str, hyperparams: dict) -> dict[str, int]:
    """Check presence, type, and lower bounds of the kind's hyperparameters."""
    if kind not in CLASSIFIER_KINDS:
        raise ValueError(f"unknown classifier kind {kind!r}; expected one of {CLASSIFIER_KINDS}")
    required = _CGP_HYPERPARAMS if kind == "CartesianClf" else _TREE_HYPERPARAMS
    optional = _CGP_OPTIONAL if kind == "CartesianClf" else {}
    out: dict[str, int] = {}
    for name, low in required.items():
        if name not in hyperparams:
            raise ValueError(f"{kind} requires hyperparameter {name!r}")
        out[name] = _int_at_least(kind, name, hyperparams[name], low)
    for name, value in hyperparams.items():
        if name in required:
            continue
        if name not in optional:
            raise ValueError(f"{kind} does not accept hyperparameter {name!r}")
        out[name] = _int_at_least(kind, name, value, optional[name])
    return out


def _int_at_least(kind: str, name: str, value, low: int) -> int:
    try:
        iv = int(value)
    except (TypeError, ValueError):
        raise ValueError(f"{kind} hyperparameter {name!r} must be an integer, got {value!r}")
    if iv != float(value) or iv < low:
        raise ValueError(f"{kind} hyperparameter {name!r} must be an integer >= {low}, got {value!r}")
    return iv


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    hyperparams: dict

    def __post_init__(self):
        object.__setattr__(self, "hyperparams", validate_hyperparams(self.kind, self.hyperparams))


@dataclass(frozen=True)
class OvRModel:
    """C independently fitted per-class individuals with argmax prediction."""

    kind: str  # GPLearnClf or CartesianClf
    per_class_models: tuple
    class_labels: tuple
    n_features: int
    traces: tuple = field(default=(), compare=False, repr=False)


@dataclass(frozen=True)
class ClaSyCoModel:
    """C cooperatively fitted trees combined through a softmax."""

    per_class_models: tuple
    class_labels: tuple
    n_features: int
    traces: tuple = field(default=(), compare=False, repr=False)

    kind: str = "ClaSyCo"


def _subtree_cache_limit(n_samples: int) -> int:
    # Bound the subtree-output cache around a 64 MB budget.
    return max(5_000, int(64e6 / (8 * n_samples + 240)))


def _bce_of_sigmoid(target, one_minus_target, z) -> float:
    """binary_cross_entropy(target, sigmoid(z)) without the argument checks."""
    t = np.exp(-np.abs(z))
    u = 1.0 + t
    p = np.where(z >= 0, 1.0 / u, t / u)
    p = np.clip(p, EPS, 1.0 - EPS)
    total = np.add.reduce(-(target * np.log(p) + one_minus_target * np.log1p(-p)))
    return float(total) / z.shape[0]


def _class_setup(X_train, y_train):
    X = np.asarray(X_train, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X_train must be 2-d")
    y = np.asarray(y_train, dtype=np.int64)
    if len(y) != X.shape[0]:
        raise ValueError("X_train and y_train row counts differ")
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("y_train must contain at least 2 distinct labels")
    positions = np.searchsorted(classes, y)
    onehot = one_hot(positions, len(classes))
    return X, tuple(int(c) for c in classes), onehot


def fit_ovr_gp(X_train, y_train, hyperparams: dict, rng: np.random.Generator) -> OvRModel:
    """One-vs-rest tree evolution: C independent populations, one per class."""
    X, classes, onehot = _class_setup(X_train, y_train)
    hp = validate_hyperparams("GPLearnClf", hyperparams)
    config = EvoConfig(n_pop=hp["n_pop"], n_gens=hp["n_gens"])
    streams = rng.spawn(len(classes))
    cache_limit = _subtree_cache_limit(X.shape[0])
    champions, traces = [], []
    for c in range(len(classes)):
        target = onehot[:, c]
        one_minus = 1.0 - target
        cache: dict = {}

        def fitness(tree, _t=target, _omt=one_minus, _cache=cache):
            if len(_cache) > cache_limit:
                _cache.clear()
            return _bce_of_sigmoid(_t, _omt, eval_tree_cached(tree, X, _cache))

        trace = evolve_tree_population(config, fitness, X.shape[1], streams[c])
        champions.append(trace.champion)
        traces.append(trace)
    return OvRModel("GPLearnClf", tuple(champions), classes, X.shape[1], tuple(traces))


def fit_ovr_cgp(X_train, y_train, hyperparams: dict, rng: np.random.Generator) -> OvRModel:
    """One-vs-rest (1+lambda) grid-genome evolution, one population per class."""
    X, classes, onehot = _class_setup(X_train, y_train)
    hp = validate_hyperparams("CartesianClf", hyperparams)
    cgp_config = CgpConfig(
        n_rows=hp["n_rows"], n_columns=hp["n_columns"], n_features=X.shape[1]
    )
    config = EvoConfig(lambda_=hp.get("lambda", DEFAULT_CGP_LAMBDA), maxiter=hp["maxiter"])
    streams = rng.spawn(len(classes))
    champions, traces = [], []
    for c in range(len(classes)):
        target = onehot[:, c]
        one_minus = 1.0 - target

        def fitness(genome, _t=target, _omt=one_minus):
            return _bce_of_sigmoid(_t, _omt, eval_genome(genome, X))

        trace = evolve_one_plus_lambda(config, fitness, cgp_config, streams[c])
        champions.append(trace.champion)
        traces.append(trace)
    return OvRModel("CartesianClf", tuple(champions), classes, X.shape[1], tuple(traces))


def clasyco_fitness(
    candidate_outputs,
    representative_outputs,
    onehot_y,
    class_position: int,
    eps: float = EPS,
) -> float:
    """Score one candidate against the other populations' representatives.

    Builds the per-sample class-score vector (representatives everywhere,
    candidate at class_position), softmaxes it, and returns the mean
    categorical cross-entropy against the one-hot targets.
    """
    cand = np.asarray(candidate_outputs, dtype=np.float64)
    reps = [np.asarray(r, dtype=np.float64) for r in representative_outputs]
    onehot_y = np.asarray(onehot_y, dtype=np.float64)
    n_classes = len(reps) + 1
    if not (0 <= class_position < n_classes):
        raise ValueError(f"class_position {class_position} out of range for C={n_classes}")
    if onehot_y.shape != (cand.shape[0], n_classes):
        raise ValueError(
            f"onehot_y shape {onehot_y.shape} does not match ({cand.shape[0]}, {n_classes})"
        )
    scores = np.empty((cand.shape[0], n_classes), dtype=np.float64)
    others = [c for c in range(n_classes) if c != class_position]
    for col, rep in zip(others, reps):
        if rep.shape != cand.shape:
            raise ValueError("all output vectors must have the same length")
        scores[:, col] = rep
    scores[:, class_position] = cand
    p_true = np.sum(softmax(scores) * onehot_y, axis=1)
    return float(np.mean(-np.log(np.clip(p_true, eps, 1.0 - eps))))


def _clasyco_losses_batch(
    candidates: list[np.ndarray],
    rep_outputs: list[np.ndarray],
    onehot_y: np.ndarray,
    class_position: int,
    eps: float = EPS,
) -> list[float]:
    """clasyco_fitness for a whole population in one vectorized pass."""
    n_classes = len(rep_outputs)
    n_pop = len(candidates)
    n = onehot_y.shape[0]
    scores = np.empty((n_pop, n, n_classes), dtype=np.float64)
    for col in range(n_classes):
        if col != class_position:
            scores[:, :, col] = rep_outputs[col]
    scores[:, :, class_position] = np.stack(candidates)
    p = softmax(scores)
    p_true = np.sum(p * onehot_y[None, :, :], axis=2)
    losses = np.mean(-np.log(np.clip(p_true, eps, 1.0 - eps)), axis=1)
    return [math.inf if math.isnan(v) else float(v) for v in losses]


def fit_clasyco(
    X_train, y_train, hyperparams: dict, rng: np.random.Generator
) -> ClaSyCoModel:
    """Cooperative coevolution of C tree populations in lockstep.

    Generation 0 uses each population's index-0 individual as its
    representative; afterwards the representative is the previous generation's
    best. Selection and variation are the standard generational step applied
    per population.
    """
    X, classes, onehot = _class_setup(X_train, y_train)
    hp = validate_hyperparams("ClaSyCo", hyperparams)
    config = EvoConfig(n_pop=hp["n_pop"], n_gens=hp["n_gens"])
    init = TreeInitConfig()
    n_classes = len(classes)
    n_features = X.shape[1]
    streams = rng.spawn(n_classes)

    pops = [
        [random_tree(init, n_features, streams[c]) for _ in range(config.n_pop)]
        for c in range(n_classes)
    ]

    traces = [EvolutionTrace() for _ in range(n_classes)]
    # Whole-tree outputs survive across generations for unchanged individuals;
    # subtree caches make evaluating fresh offspring cost only their new path.
    output_cache: list[dict[int, np.ndarray]] = [{} for _ in range(n_classes)]
    subtree_caches: list[dict] = [{} for _ in range(n_classes)]
    cache_limit = _subtree_cache_limit(X.shape[0])
    rep_outputs = [eval_tree_cached(pops[c][0], X, subtree_caches[c]) for c in range(n_classes)]

    for gen in range(config.n_gens):
        all_outputs = []
        for c in range(n_classes):
            cache = output_cache[c]
            sub = subtree_caches[c]
            if len(sub) > cache_limit:
                sub.clear()
            outs = []
            for ind in pops[c]:
                got = cache.get(id(ind))
                if got is None:
                    got = eval_tree_cached(ind, X, sub)
                outs.append(got)
            all_outputs.append(outs)

        losses = [
            _clasyco_losses_batch(all_outputs[c], rep_outputs, onehot, c)
            for c in range(n_classes)
        ]

        bests = []
        for c in range(n_classes):
            best = min(range(config.n_pop), key=lambda i: (losses[c][i], i))
            bests.append(best)
            traces[c].record(gen, losses[c][best], pops[c][best])

        new_rep_outputs = [all_outputs[c][bests[c]] for c in range(n_classes)]
        if gen < config.n_gens - 1:
            for c in range(n_classes):
                output_cache[c] = dict(
                    zip(map(id, pops[c]), all_outputs[c])
                )
                pops[c] = breed_tree_population(
                    pops[c], losses[c], config, init, n_features, streams[c]
                )
        rep_outputs = new_rep_outputs

    champions = tuple(traces[c].champion for c in range(n_classes))
    return ClaSyCoModel(champions, classes, n_features, tuple(traces))


def fit_classifier(kind: str, hyperparams: dict, X_train, y_train, rng: np.random.Generator):
    """Dispatch to the named classifier's fit routine."""
    if kind == "GPLearnClf":
        return fit_ovr_gp(X_train, y_train, hyperparams, rng)
    if kind == "CartesianClf":
        return fit_ovr_cgp(X_train, y_train, hyperparams, rng)
    if kind == "ClaSyCo":
        return fit_clasyco(X_train, y_train, hyperparams, rng)
    raise ValueError(f"unknown classifier kind {kind!r}")


def _raw_outputs(model, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(
            f"model expects {model.n_features} features, got matrix of shape {X.shape}"
        )
    if model.kind == "CartesianClf":
        columns = [eval_genome(g, X) for g in model.per_class_models]
    else:
        columns = [eval_tree(t, X) for t in model.per_class_models]
    return np.column_stack(columns)


def predict_proba(model, X) -> np.ndarray:
    """Per-row class probabilities: softmax for ClaSyCo, renormalized sigmoid
    scores for the one-vs-rest models. Rows sum to 1."""
    raw = _raw_outputs(model, X)
    if model.kind == "ClaSyCo":
        return softmax(raw)
    s = sigmoid(raw)
    return s / np.sum(s, axis=1, keepdims=True)


def predict(model, X) -> np.ndarray:
    """Predicted class labels; ties resolve to the lowest class index."""
    proba = predict_proba(model, X)
    idx = np.argmax(proba, axis=1)
    labels = np.asarray(model.class_labels)
    return labels[idx]


@dataclass(frozen=True)
class SavedModel:
    """A fitted classifier plus everything needed to score raw feature rows:
    the training-set scaler, the original label strings, and provenance."""

    kind: str
    class_labels: tuple[str, ...]
    hyperparams: dict
    seed: int
    scaler: ScalerParams
    feature_names: tuple[str, ...]
    individuals: tuple
    cgp_config: CgpConfig | None = None

    def core_model(self):
        positions = tuple(range(len(self.class_labels)))
        if self.kind == "ClaSyCo":
            return ClaSyCoModel(self.individuals, positions, len(self.feature_names))
        return OvRModel(self.kind, self.individuals, positions, len(self.feature_names))

    def predict_labels(self, X_raw) -> list[str]:
        Xs = transform_scaler(self.scaler, X_raw)
        idx = predict(self.core_model(), Xs)
        return [self.class_labels[i] for i in idx]

    def predict_proba(self, X_raw) -> np.ndarray:
        Xs = transform_scaler(self.scaler, X_raw)
        return predict_proba(self.core_model(), Xs)

    def to_text(self) -> str:
        if self.kind == "CartesianClf":
            individuals = [g.to_flat() for g in self.individuals]
            cgp = {
                "n_rows": self.cgp_config.n_rows,
                "n_columns": self.cgp_config.n_columns,
                "levels_back": self.cgp_config.levels_back,
                "n_features": self.cgp_config.n_features,
                "function_set": list(self.cgp_config.function_set),
            }
        else:
            individuals = [t.render() for t in self.individuals]
            cgp = None
        payload = {
            "format": MODEL_FORMAT,
            "kind": self.kind,
            "class_labels": list(self.class_labels),
            "hyperparams": dict(sorted(self.hyperparams.items())),
            "seed": self.seed,
            "scaler": {
                "mean": [float(v) for v in self.scaler.mean],
                "scale": [float(v) for v in self.scaler.scale],
            },
            "feature_names": list(self.feature_names),
            "cgp_config": cgp,
            "individuals": individuals,
        }
        return json.dumps(payload, sort_keys=True) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SavedModel":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"invalid model: not valid JSON ({exc})") from exc
        if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT:
            raise ModelFormatError(f"invalid model: expected format {MODEL_FORMAT!r}")
        try:
            kind = payload["kind"]
            if kind not in CLASSIFIER_KINDS:
                raise ModelFormatError(f"invalid model: unknown kind {kind!r}")
            scaler = ScalerParams(
                np.asarray(payload["scaler"]["mean"], dtype=np.float64),
                np.asarray(payload["scaler"]["scale"], dtype=np.float64),
            )
            if kind == "CartesianClf":
                raw_cfg = payload["cgp_config"]
                cgp_config = CgpConfig(
                    n_rows=int(raw_cfg["n_rows"]),
                    n_columns=int(raw_cfg["n_columns"]),
                    n_features=int(raw_cfg["n_features"]),
                    levels_back=int(raw_cfg["levels_back"]),
                    function_set=tuple(raw_cfg["function_set"]),
                )
                individuals = tuple(
                    CgpGenome.from_flat(cgp_config, flat) for flat in payload["individuals"]
                )
            else:
                cgp_config = None
                individuals = tuple(parse_tree(s) for s in payload["individuals"])
            model = cls(
                kind=kind,
                class_labels=tuple(str(v) for v in payload["class_labels"]),
                hyperparams=dict(payload["hyperparams"]),
                seed=int(payload["seed"]),
                scaler=scaler,
                feature_names=tuple(str(v) for v in payload["feature_names"]),
                individuals=individuals,
                cgp_config=cgp_config,
            )
        except ModelFormatError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"invalid model: {exc}") from exc
        if len(model.class_labels) != len(model.individuals) or len(model.class_labels) < 2:
            raise ModelFormatError("invalid model: per-class individual count mismatch")
        return model
