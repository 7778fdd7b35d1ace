"""Acceptance suite: one test per exit criterion, each printing a PASS/FAIL line.

Run with ``pytest -s tests/test_acceptance.py`` to see the per-criterion lines.
The benchmark reproduction test runs the full desk-scale protocol twice and is
the longest item (several minutes per run).
"""

import math
import time
from contextlib import contextmanager

import numpy as np
import pytest
from click.testing import CliRunner

from srclassify.cgp import CgpConfig, point_mutate, random_genome, eval_genome
from srclassify.classifiers import (
    SavedModel,
    clasyco_fitness,
    fit_clasyco,
    fit_ovr_cgp,
    fit_ovr_gp,
    predict,
)
from srclassify.cli import main
from srclassify.data import Dataset, fit_scaler, one_hot, train_test_split, transform_scaler
from srclassify.evolution import EvoConfig, evolve_one_plus_lambda, evolve_tree_population
from srclassify.hpo import best_trial, float_param, format_params, run_study
from srclassify.metrics import (
    argmax_tiebreak,
    balanced_accuracy,
    binary_cross_entropy,
    categorical_cross_entropy,
    sigmoid,
    softmax,
)
from srclassify.trees import TreeInitConfig, eval_tree, random_tree

from conftest import blobs_dataset, dataset_to_csv, threshold_dataset


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name}")
        raise
    print(f"[PASS] {name}")


def test_analytic_loss_suite():
    with criterion("analytic loss suite"):
        started = time.perf_counter()
        assert sigmoid(0.0) == 0.5
        assert abs(sigmoid(math.log(3)) - 0.75) < 1e-12
        assert np.allclose(softmax([0.0, 0.0, 0.0]), [1 / 3] * 3, atol=1e-12)
        rng = np.random.default_rng(0)
        for _ in range(100):
            z = rng.normal(size=4) * 10
            c = rng.uniform(-100, 100)
            assert np.max(np.abs(softmax(z) - softmax(z + c))) < 1e-12
        assert abs(binary_cross_entropy([1.0], [0.5]) - math.log(2)) < 1e-9
        assert abs(categorical_cross_entropy([1, 0, 0, 0], [0.25] * 4) - math.log(4)) < 1e-9
        assert time.perf_counter() - started < 1.0


def test_protected_op_totality():
    with criterion("protected-op totality (1e6 evaluations)"):
        started = time.perf_counter()
        rng = np.random.default_rng(1)
        n_rows = 640
        X = rng.uniform(-25.0, 25.0, size=(n_rows, 4))
        evaluations = 0
        init = TreeInitConfig()
        for _ in range(900):
            out = eval_tree(random_tree(init, 4, rng), X)
            assert np.all(np.isfinite(out))
            evaluations += n_rows
        cfg = CgpConfig(n_rows=3, n_columns=15, n_features=4)
        for _ in range(700):
            out = eval_genome(random_genome(cfg, rng), X)
            assert np.all(np.isfinite(out))
            evaluations += n_rows
        assert evaluations >= 1_000_000
        assert time.perf_counter() - started < 30.0


def test_oracle_equivalences():
    with criterion("oracle equivalences (argmax, decode/eval, cooperative fitness)"):
        rng = np.random.default_rng(2)
        # argmax vs linear scan, exact
        for _ in range(10_000):
            v = rng.integers(0, 6, size=int(rng.integers(1, 9))).astype(float)
            best = 0
            for i in range(1, len(v)):
                if v[i] > v[best]:
                    best = i
            assert argmax_tiebreak(v) == best
        # grid decode-then-eval vs naive recursion, exact
        X = rng.normal(size=(12, 3))
        for _ in range(1000):
            cfg = CgpConfig(
                n_rows=int(rng.integers(1, 4)),
                n_columns=int(rng.integers(1, 9)),
                n_features=3,
            )
            g = random_genome(cfg, rng)

            def naive(addr):
                if addr < cfg.n_features:
                    return X[:, addr]
                from srclassify.functions import FUNCTIONS

                f, a, b = g.nodes[addr - cfg.n_features]
                spec = FUNCTIONS[cfg.function_set[f]]
                return spec.fn(naive(a)) if spec.arity == 1 else spec.fn(naive(a), naive(b))

            assert np.array_equal(eval_genome(g, X), naive(g.output_gene))
        # vectorized cooperative fitness vs per-sample loop, 1e-12
        for _ in range(100):
            C = int(rng.integers(2, 5))
            n = int(rng.integers(1, 10))
            cand = rng.normal(size=n) * 4
            reps = [rng.normal(size=n) * 4 for _ in range(C - 1)]
            y = rng.integers(0, C, size=n)
            onehot = one_hot(y, C)
            c = int(rng.integers(0, C))
            total = 0.0
            for i in range(n):
                scores, it = [], iter(reps)
                for col in range(C):
                    scores.append(cand[i] if col == c else next(it)[i])
                p = softmax(np.array(scores))
                total += -math.log(min(max(p[y[i]], 1e-15), 1.0 - 1e-15))
            assert abs(clasyco_fitness(cand, reps, onehot, c) - total / n) < 1e-12


def _hash_loss(individual) -> float:
    import hashlib

    text = individual.render() if hasattr(individual, "render") else repr(individual.to_flat())
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big") / 2**64


def test_evolution_invariants():
    with criterion("evolution invariants (monotone elitism, draw-prefers-offspring, distance-1)"):
        # generational engine: best loss non-increasing over 50 generations
        trace = evolve_tree_population(
            EvoConfig(n_pop=20, n_gens=50, tournament_size=3),
            _hash_loss,
            3,
            np.random.default_rng(3),
        )
        assert len(trace.best_losses) == 50
        assert all(a >= b for a, b in zip(trace.best_losses, trace.best_losses[1:]))
        # (1+lambda): non-increasing over 50 generations on a random landscape
        cfg = CgpConfig(n_rows=2, n_columns=8, n_features=3)
        trace = evolve_one_plus_lambda(
            EvoConfig(lambda_=4, maxiter=50), _hash_loss, cfg, np.random.default_rng(4)
        )
        assert all(a >= b for a, b in zip(trace.best_losses, trace.best_losses[1:]))
        # constant fitness: the draw prefers the offspring every generation
        trace = evolve_one_plus_lambda(
            EvoConfig(lambda_=4, maxiter=30), lambda g: 1.0, cfg, np.random.default_rng(5)
        )
        for prev, cur in zip(trace.best_individuals, trace.best_individuals[1:]):
            assert prev != cur
        # point mutation is exactly one gene away
        rng = np.random.default_rng(6)
        for _ in range(300):
            g = random_genome(cfg, rng)
            m = point_mutate(g, rng)
            assert sum(a != b for a, b in zip(g.to_flat(), m.to_flat())) == 1


FITTERS = (
    ("GPLearnClf", fit_ovr_gp, {"n_pop": 50, "n_gens": 30}),
    ("CartesianClf", fit_ovr_cgp, {"n_rows": 2, "n_columns": 20, "maxiter": 300}),
    ("ClaSyCo", fit_clasyco, {"n_pop": 50, "n_gens": 30}),
)


def test_learning_pin_threshold_dataset():
    with criterion("desk-scale pin: 1-feature threshold dataset (train >= 0.95)"):
        started = time.perf_counter()
        X, y = threshold_dataset(100, seed=0)
        for name, fit, hp in FITTERS:
            model = fit(X, y, hp, np.random.default_rng(7))
            acc = balanced_accuracy(y, predict(model, X))
            assert acc >= 0.95, f"{name} reached only {acc:.3f}"
        assert time.perf_counter() - started < 120


def test_learning_pin_blobs_dataset():
    with criterion("desk-scale pin: 3-class blobs (test >= 0.90 in >= 8/10 seeds)"):
        started = time.perf_counter()
        X, y = blobs_dataset(67, seed=1)
        X, y = X[:200], y[:200]
        ds = Dataset(X, y, ("a", "b"), ("0", "1", "2"))
        for name, fit, hp in FITTERS:
            good = 0
            for seed in range(10):
                rng = np.random.default_rng(seed)
                train, test = train_test_split(ds, rng)
                scaler = fit_scaler(train.X)
                model = fit(transform_scaler(scaler, train.X), train.y, hp, rng)
                acc = balanced_accuracy(
                    test.y, predict(model, transform_scaler(scaler, test.X))
                )
                good += acc >= 0.90
            assert good >= 8, f"{name} hit 0.90 in only {good}/10 seeds"
        assert time.perf_counter() - started < 120


def test_hpo_sanity():
    with criterion("hpo sanity (density sampler beats random >= 70/100; report format)"):
        started = time.perf_counter()
        space = [float_param("x", 0.0, 4.0)]

        def objective(params):
            return 1.0 / (1.0 + (params["x"] - 2.0) ** 2)

        wins = 0
        for rep in range(100):
            s_tpe = best_trial(run_study(space, objective, 100, "tpe", seed=rep)).score
            s_rand = best_trial(run_study(space, objective, 100, "random", seed=rep)).score
            wins += s_tpe >= s_rand
        assert wins >= 70, f"density sampler won only {wins}/100"
        assert time.perf_counter() - started < 60

        rendered = format_params(
            {"classifier": "ClaSyCo", "ClaSyCo_n_pop": 27, "ClaSyCo_n_gens": 135}
        )
        assert rendered == "{'classifier': 'ClaSyCo', 'ClaSyCo_n_pop': 27, 'ClaSyCo_n_gens': 135}"


def _write_benchmark_inputs(tmp_path):
    rng = np.random.default_rng(100)
    X1, y1 = threshold_dataset(40, seed=101)
    (tmp_path / "thresh.csv").write_text(
        dataset_to_csv(X1, np.where(y1 == 1, "hi", "lo")), encoding="utf-8"
    )
    X2 = rng.normal(size=(40, 2))
    y2 = np.where(X2[:, 0] * X2[:, 1] > 0, "same", "diff")
    (tmp_path / "quad.csv").write_text(dataset_to_csv(X2, y2), encoding="utf-8")
    X3 = rng.normal(size=(36, 2))
    y3 = np.where(X3[:, 0] ** 2 + X3[:, 1] ** 2 < 1.2, "in", "out")
    (tmp_path / "ring.csv").write_text(dataset_to_csv(X3, y3), encoding="utf-8")
    records = tmp_path / "records.tsv"
    config = tmp_path / "bench.cfg"
    config.write_text(
        f"dataset = {tmp_path}/thresh.csv : label\n"
        f"dataset = {tmp_path}/quad.csv : label\n"
        f"dataset = {tmp_path}/ring.csv : label\n"
        "n_replicates = 5\n"
        "n_trials = 20\n"
        "sampler = random\n"
        "base_seed = 2024\n"
        f"records = {records}\n",
        encoding="utf-8",
    )
    return config, records


@pytest.mark.slow
def test_protocol_reproduction(tmp_path):
    with criterion("protocol reproduction (3 datasets x 5 replicates x 20 trials, twice)"):
        config, records = _write_benchmark_inputs(tmp_path)
        runner = CliRunner()

        started = time.perf_counter()
        result = runner.invoke(main, ["benchmark", "--config", str(config)])
        elapsed = time.perf_counter() - started
        assert result.exit_code == 0, result.output
        assert elapsed < 600, f"benchmark took {elapsed:.0f}s"
        first = records.read_bytes()
        lines = first.decode().strip().splitlines()
        assert len(lines) == 15

        result = runner.invoke(main, ["benchmark", "--config", str(config)])
        assert result.exit_code == 0, result.output
        assert records.read_bytes() == first, "second run differs byte-for-byte"

        tally = runner.invoke(main, ["tally", "--records", str(records)])
        assert tally.exit_code == 0, tally.output
        total_pct = sum(
            float(line.split("--")[1].strip().rstrip("% wins").strip())
            for line in tally.output.strip().splitlines()
        )
        assert abs(total_pct - 100.0) < 0.05

        # hand-computed percentages: winners (A, A, B, C) -> 50.00 / 25.00 / 25.00
        hand = tmp_path / "hand.tsv"
        hand.write_text(
            "d\t0\tok\tClaSyCo\t0.9\t{}\n"
            "d\t1\tok\tClaSyCo\t0.9\t{}\n"
            "d\t2\tok\tGPLearnClf\t0.9\t{}\n"
            "d\t3\tok\tCartesianClf\t0.9\t{}\n",
            encoding="utf-8",
        )
        result = runner.invoke(main, ["tally", "--records", str(hand)])
        assert result.output.splitlines() == [
            "ClaSyCo -- 50.00% wins",
            "CartesianClf -- 25.00% wins",
            "GPLearnClf -- 25.00% wins",
        ]


def test_determinism_fit_serialize_predict(tmp_path):
    with criterion("determinism (serialize/deserialize round-trip, byte-identical fits)"):
        X, y = threshold_dataset(60, seed=9)
        csv_path = tmp_path / "d.csv"
        csv_path.write_text(
            dataset_to_csv(X, np.where(y == 1, "p", "n")), encoding="utf-8"
        )
        runner = CliRunner()
        models = []
        for name in ("m1.json", "m2.json"):
            out = tmp_path / name
            result = runner.invoke(
                main,
                [
                    "fit", "--data", str(csv_path), "--label", "label",
                    "--classifier", "ClaSyCo", "--params", "n_pop=20,n_gens=8",
                    "--seed", "17", "--out", str(out),
                ],
            )
            assert result.exit_code == 0, result.output
            models.append(out.read_bytes())
        assert models[0] == models[1], "same-seed fits are not byte-identical"

        saved = SavedModel.from_text(models[0].decode())
        direct = saved.predict_labels(X)
        reloaded = SavedModel.from_text(saved.to_text()).predict_labels(X)
        assert direct == reloaded

        result = runner.invoke(
            main, ["predict", "--model", str(tmp_path / "m1.json"), "--data", str(csv_path)]
        )
        assert result.exit_code == 0
        assert result.output.strip().splitlines() == direct
