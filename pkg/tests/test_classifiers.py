import math

import numpy as np
import pytest

from srclassify.classifiers import (
    ClassifierSpec,
    ClaSyCoModel,
    ModelFormatError,
    OvRModel,
    SavedModel,
    clasyco_fitness,
    fit_classifier,
    fit_clasyco,
    fit_ovr_cgp,
    fit_ovr_gp,
    predict,
    predict_proba,
    validate_hyperparams,
)
from srclassify.cgp import CgpConfig, CgpGenome
from srclassify.data import ScalerParams, fit_scaler, one_hot, train_test_split, transform_scaler
from srclassify.evolution import EvoConfig, evolve_tree_population
from srclassify.metrics import balanced_accuracy, sigmoid, softmax
from srclassify.trees import parse_tree

from conftest import blobs_dataset, threshold_dataset

PIN_SEED = 7


def test_validate_hyperparams():
    assert validate_hyperparams("GPLearnClf", {"n_pop": 10, "n_gens": 5}) == {
        "n_pop": 10,
        "n_gens": 5,
    }
    with pytest.raises(ValueError, match="requires"):
        validate_hyperparams("ClaSyCo", {"n_pop": 10})
    with pytest.raises(ValueError, match="does not accept"):
        validate_hyperparams("GPLearnClf", {"n_pop": 10, "n_gens": 5, "bogus": 1})
    with pytest.raises(ValueError, match=">= 2"):
        validate_hyperparams("GPLearnClf", {"n_pop": 1, "n_gens": 5})
    with pytest.raises(ValueError, match="unknown classifier"):
        validate_hyperparams("RandomForest", {})
    out = validate_hyperparams(
        "CartesianClf", {"n_rows": 2, "n_columns": 10, "maxiter": 50, "lambda": 6}
    )
    assert out["lambda"] == 6


def test_classifier_spec_validates():
    spec = ClassifierSpec("ClaSyCo", {"n_pop": 12, "n_gens": 3})
    assert spec.hyperparams == {"n_pop": 12, "n_gens": 3}
    with pytest.raises(ValueError):
        ClassifierSpec("ClaSyCo", {"n_pop": 12})


def test_fit_ovr_gp_threshold_pin():
    X, y = threshold_dataset(100, seed=0)
    model = fit_ovr_gp(X, y, {"n_pop": 50, "n_gens": 30}, np.random.default_rng(PIN_SEED))
    acc = balanced_accuracy(y, predict(model, X))
    assert acc >= 0.95


def test_fit_ovr_gp_deterministic():
    X, y = threshold_dataset(60, seed=1)
    hp = {"n_pop": 20, "n_gens": 8}
    m1 = fit_ovr_gp(X, y, hp, np.random.default_rng(3))
    m2 = fit_ovr_gp(X, y, hp, np.random.default_rng(3))
    assert [t.render() for t in m1.per_class_models] == [t.render() for t in m2.per_class_models]


def test_fit_ovr_gp_single_class_error():
    X = np.zeros((10, 2))
    with pytest.raises(ValueError, match="2 distinct"):
        fit_ovr_gp(X, np.zeros(10, dtype=int), {"n_pop": 10, "n_gens": 2}, np.random.default_rng(0))


def test_fit_ovr_gp_populations_are_independent():
    """Champions match running each class's evolution by itself on the same stream."""
    X, y = threshold_dataset(50, seed=2)
    hp = {"n_pop": 15, "n_gens": 6}
    model = fit_ovr_gp(X, y, hp, np.random.default_rng(11))

    onehot = one_hot(y, 2)
    from srclassify.classifiers import _bce_of_sigmoid
    from srclassify.trees import eval_tree

    streams = np.random.default_rng(11).spawn(2)
    config = EvoConfig(n_pop=15, n_gens=6)
    for c in range(2):
        target = onehot[:, c]
        trace = evolve_tree_population(
            config,
            lambda t: _bce_of_sigmoid(target, 1.0 - target, eval_tree(t, X)),
            1,
            streams[c],
        )
        assert trace.champion.render() == model.per_class_models[c].render()


def test_fit_ovr_cgp_threshold_pin_and_traces():
    X, y = threshold_dataset(100, seed=0)
    hp = {"n_rows": 2, "n_columns": 20, "maxiter": 300}
    model = fit_ovr_cgp(X, y, hp, np.random.default_rng(PIN_SEED))
    assert balanced_accuracy(y, predict(model, X)) >= 0.95
    for trace in model.traces:
        assert len(trace.best_losses) == 301
        assert all(a >= b for a, b in zip(trace.best_losses, trace.best_losses[1:]))


def test_fit_ovr_cgp_lambda_defaults_to_four():
    X, y = threshold_dataset(40, seed=3)
    hp = {"n_rows": 1, "n_columns": 8, "maxiter": 20}
    m1 = fit_ovr_cgp(X, y, hp, np.random.default_rng(5))
    m2 = fit_ovr_cgp(X, y, {**hp, "lambda": 4}, np.random.default_rng(5))
    assert m1.per_class_models == m2.per_class_models
    m3 = fit_ovr_cgp(X, y, {**hp, "lambda": 1}, np.random.default_rng(5))
    assert m3.per_class_models != m1.per_class_models


def test_clasyco_fitness_uniform_outputs():
    for C in (2, 3, 5):
        onehot = one_hot([0, 1, 0], C) if C > 1 else None
        zeros = np.zeros(3)
        loss = clasyco_fitness(zeros, [zeros] * (C - 1), onehot, 0)
        assert abs(loss - math.log(C)) < 1e-12


def test_clasyco_fitness_hand_example():
    # assembled class outputs (2, 0), true class 0
    loss = clasyco_fitness(np.array([2.0]), [np.array([0.0])], one_hot([0], 2), 0)
    assert abs(loss - 0.12692801104297263) < 1e-12


def test_clasyco_fitness_matches_per_sample_loop():
    rng = np.random.default_rng(8)
    for _ in range(100):
        C = int(rng.integers(2, 5))
        n = int(rng.integers(1, 12))
        cand = rng.normal(size=n) * 5
        reps = [rng.normal(size=n) * 5 for _ in range(C - 1)]
        y = rng.integers(0, C, size=n)
        onehot = one_hot(y, C)
        c = int(rng.integers(0, C))

        total = 0.0
        for i in range(n):
            scores = []
            it = iter(reps)
            for col in range(C):
                scores.append(cand[i] if col == c else next(it)[i])
            p = softmax(np.array(scores))
            total += -math.log(min(max(p[y[i]], 1e-15), 1 - 1e-15))
        expected = total / n

        assert abs(clasyco_fitness(cand, reps, onehot, c) - expected) < 1e-12


def test_clasyco_fitness_argument_errors():
    onehot = one_hot([0, 1], 2)
    with pytest.raises(ValueError):
        clasyco_fitness(np.zeros(2), [np.zeros(3)], onehot, 0)
    with pytest.raises(ValueError):
        clasyco_fitness(np.zeros(2), [np.zeros(2)], onehot, 5)
    with pytest.raises(ValueError):
        clasyco_fitness(np.zeros(3), [np.zeros(3)], onehot, 0)


def test_clasyco_fitness_depends_on_representatives():
    cand = np.array([1.0, -1.0])
    onehot = one_hot([0, 1], 2)
    a = clasyco_fitness(cand, [np.array([0.0, 0.0])], onehot, 0)
    b = clasyco_fitness(cand, [np.array([3.0, -3.0])], onehot, 0)
    assert a != b


def test_fit_clasyco_blobs_pin():
    X, y = blobs_dataset(50, seed=4)  # 150 samples
    model = fit_clasyco(X, y, {"n_pop": 50, "n_gens": 30}, np.random.default_rng(PIN_SEED))
    assert balanced_accuracy(y, predict(model, X)) >= 0.90
    assert len(model.per_class_models) == 3
    for trace in model.traces:
        assert all(math.isfinite(v) for v in trace.best_losses)


def test_fit_clasyco_deterministic():
    X, y = threshold_dataset(40, seed=5)
    hp = {"n_pop": 15, "n_gens": 5}
    m1 = fit_clasyco(X, y, hp, np.random.default_rng(2))
    m2 = fit_clasyco(X, y, hp, np.random.default_rng(2))
    assert [t.render() for t in m1.per_class_models] == [t.render() for t in m2.per_class_models]


def _toy_ovr(kind="GPLearnClf"):
    trees = (parse_tree("x0"), parse_tree("neg(x0)"))
    return OvRModel(kind, trees, (0, 1), 2)


def test_predict_ovr_argmax():
    model = _toy_ovr()
    X = np.array([[5.0, 0.0], [-5.0, 0.0]])
    assert predict(model, X).tolist() == [0, 1]


def test_predict_tie_goes_to_first_class():
    trees = (parse_tree("x0"), parse_tree("x0"))
    model = OvRModel("GPLearnClf", trees, (3, 9), 1)
    assert predict(model, np.array([[2.0]])).tolist() == [3]


def test_predict_feature_mismatch():
    with pytest.raises(ValueError, match="expects 2 features"):
        predict(_toy_ovr(), np.zeros((3, 5)))


def test_predict_proba_rows_sum_to_one_and_argmax_consistent():
    rng = np.random.default_rng(9)
    X, y = blobs_dataset(15, seed=6)
    model = fit_clasyco(X, y, {"n_pop": 10, "n_gens": 3}, rng)
    proba = predict_proba(model, X)
    assert np.all(np.abs(proba.sum(axis=1) - 1.0) < 1e-9)
    labels = predict(model, X)
    assert np.array_equal(labels, np.array(model.class_labels)[np.argmax(proba, axis=1)])


def test_predict_proba_binary_symmetric():
    trees = (parse_tree("sub(x0, x0)"), parse_tree("sub(x1, x1)"))  # both always 0
    model = OvRModel("GPLearnClf", trees, (0, 1), 2)
    proba = predict_proba(model, np.array([[1.0, 2.0]]))
    assert np.allclose(proba, [[0.5, 0.5]])


def test_ovr_monotone_transform_invariance():
    rng = np.random.default_rng(10)
    X, y = threshold_dataset(30, seed=7)
    model = fit_ovr_gp(X, y, {"n_pop": 10, "n_gens": 3}, rng)
    from srclassify.classifiers import _raw_outputs

    raw = _raw_outputs(model, X)
    assert np.array_equal(
        np.argmax(sigmoid(raw), axis=1), np.argmax(raw, axis=1)
    )


def test_clasyco_proba_is_softmax_of_raw():
    X, y = blobs_dataset(10, seed=8)
    model = fit_clasyco(X, y, {"n_pop": 8, "n_gens": 2}, np.random.default_rng(0))
    from srclassify.classifiers import _raw_outputs

    raw = _raw_outputs(model, X)
    assert np.allclose(predict_proba(model, X), softmax(raw))


def _saved_tree_model():
    scaler = ScalerParams(np.array([0.5, -1.0]), np.array([2.0, 1.0]))
    return SavedModel(
        kind="GPLearnClf",
        class_labels=("neg", "pos"),
        hyperparams={"n_pop": 10, "n_gens": 5},
        seed=3,
        scaler=scaler,
        feature_names=("a", "b"),
        individuals=(parse_tree("neg(x0)"), parse_tree("x0")),
    )


def test_saved_model_roundtrip_tree():
    saved = _saved_tree_model()
    text = saved.to_text()
    back = SavedModel.from_text(text)
    assert back.to_text() == text
    X = np.array([[3.0, 0.0], [-4.0, 1.0]])
    assert back.predict_labels(X) == saved.predict_labels(X) == ["pos", "neg"]


def test_saved_model_roundtrip_cgp():
    cfg = CgpConfig(n_rows=1, n_columns=2, n_features=2)
    genomes = (
        CgpGenome(cfg, ((0, 0, 1), (2, 2, 0)), 3),
        CgpGenome(cfg, ((7, 0, 0), (1, 2, 1)), 2),
    )
    saved = SavedModel(
        kind="CartesianClf",
        class_labels=("x", "y"),
        hyperparams={"n_rows": 1, "n_columns": 2, "maxiter": 9},
        seed=0,
        scaler=ScalerParams(np.zeros(2), np.ones(2)),
        feature_names=("a", "b"),
        individuals=genomes,
        cgp_config=cfg,
    )
    back = SavedModel.from_text(saved.to_text())
    assert back.to_text() == saved.to_text()
    X = np.array([[2.0, 3.0], [0.5, 0.5]])
    assert back.predict_labels(X) == saved.predict_labels(X)


def test_saved_model_invalid_text():
    for bad in ["", "not json", '{"format": "nope"}', '{"format": "srclassify-model/1"}']:
        with pytest.raises(ModelFormatError, match="invalid model"):
            SavedModel.from_text(bad)


def test_fit_classifier_dispatch():
    X, y = threshold_dataset(30, seed=9)
    m = fit_classifier("ClaSyCo", {"n_pop": 8, "n_gens": 2}, X, y, np.random.default_rng(0))
    assert isinstance(m, ClaSyCoModel)
    with pytest.raises(ValueError):
        fit_classifier("nope", {}, X, y, np.random.default_rng(0))


def test_fit_predict_pipeline_on_split_data():
    X, y = blobs_dataset(40, seed=10)
    from srclassify.data import Dataset

    ds = Dataset(X, y, ("a", "b"), ("c0", "c1", "c2"))
    train, test = train_test_split(ds, np.random.default_rng(1))
    scaler = fit_scaler(train.X)
    model = fit_ovr_gp(
        transform_scaler(scaler, train.X), train.y, {"n_pop": 40, "n_gens": 20},
        np.random.default_rng(PIN_SEED),
    )
    acc = balanced_accuracy(test.y, predict(model, transform_scaler(scaler, test.X)))
    assert acc >= 0.85
