"""Hyperparameter search over nested/conditional spaces.

Two samplers: uniform random, and a univariate kernel-density sampler that
splits the trial history at the gamma-quantile of score into good and bad
sets, models each parameter's good and bad densities independently, and
proposes the candidate maximizing their ratio. Scores are maximized and a
conditional parameter is only sampled when its parent holds the required
value, so parents must precede their children in the space.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .classifiers import CLASSIFIER_KINDS

PARAM_KINDS = ("categorical", "int", "float")

# Density-sampler settings: startup trials served uniformly, split quantile,
# candidates drawn per parameter, and the bandwidth floor factor.
N_STARTUP = 10
GAMMA = 0.25
N_EI_CANDIDATES = 24
MIN_BANDWIDTH_FACTOR = 1e-3


@dataclass(frozen=True)
class ParamSpec:
    """One search dimension; `condition` gates sampling on a parent's value."""

    name: str
    kind: str
    choices: tuple = ()
    low: float | None = None
    high: float | None = None
    log_scale: bool = False
    condition: tuple | None = None

    def __post_init__(self):
        if self.kind not in PARAM_KINDS:
            raise ValueError(f"unknown param kind {self.kind!r}")
        if self.kind == "categorical":
            if not self.choices:
                raise ValueError(f"categorical param {self.name!r} needs choices")
        else:
            if self.low is None or self.high is None or self.low > self.high:
                raise ValueError(f"param {self.name!r} needs low <= high")
            if self.log_scale and self.low <= 0:
                raise ValueError(f"log-scale param {self.name!r} needs low > 0")
        if self.condition is not None and len(self.condition) != 2:
            raise ValueError("condition must be (parent_name, required_value)")

    def active(self, params: dict) -> bool:
        if self.condition is None:
            return True
        parent, required = self.condition
        return params.get(parent) == required


def categorical(name: str, choices, condition=None) -> ParamSpec:
    return ParamSpec(name, "categorical", choices=tuple(choices), condition=condition)


def int_param(name: str, low: int, high: int, condition=None) -> ParamSpec:
    return ParamSpec(name, "int", low=low, high=high, condition=condition)


def float_param(name: str, low: float, high: float, log_scale=False, condition=None) -> ParamSpec:
    return ParamSpec(name, "float", low=low, high=high, log_scale=log_scale, condition=condition)


@dataclass
class Trial:
    """One evaluated parameter assignment. Failed trials keep score None.

    intermediate_scores is reserved for future early-stopping support and is
    always empty in this version.
    """

    trial_id: int
    params: dict
    score: float | None
    state: str
    intermediate_scores: list = field(default_factory=list)


@dataclass
class Study:
    space: list
    sampler: str
    seed: int
    trials: list = field(default_factory=list)

    def complete_trials(self) -> list[Trial]:
        return [t for t in self.trials if t.state == "complete"]

    def to_text(self) -> str:
        """Line-delimited persistence: a header line, then one trial per line."""
        header = {
            "sampler": self.sampler,
            "seed": self.seed,
            "space": [_spec_to_dict(s) for s in self.space],
        }
        lines = [json.dumps(header, sort_keys=True)]
        for t in self.trials:
            lines.append(
                json.dumps(
                    {
                        "trial_id": t.trial_id,
                        "params": t.params,
                        "score": t.score,
                        "state": t.state,
                        "intermediate_scores": t.intermediate_scores,
                    },
                    sort_keys=True,
                )
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Study":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty study file")
        header = json.loads(lines[0])
        study = cls(
            space=[_spec_from_dict(d) for d in header["space"]],
            sampler=header["sampler"],
            seed=int(header["seed"]),
        )
        for ln in lines[1:]:
            d = json.loads(ln)
            study.trials.append(
                Trial(
                    trial_id=int(d["trial_id"]),
                    params=dict(d["params"]),
                    score=None if d["score"] is None else float(d["score"]),
                    state=d["state"],
                    intermediate_scores=list(d["intermediate_scores"]),
                )
            )
        return study


def _spec_to_dict(spec: ParamSpec) -> dict:
    return {
        "name": spec.name,
        "kind": spec.kind,
        "choices": list(spec.choices),
        "low": spec.low,
        "high": spec.high,
        "log_scale": spec.log_scale,
        "condition": list(spec.condition) if spec.condition else None,
    }


def _spec_from_dict(d: dict) -> ParamSpec:
    return ParamSpec(
        name=d["name"],
        kind=d["kind"],
        choices=tuple(d["choices"]),
        low=d["low"],
        high=d["high"],
        log_scale=d["log_scale"],
        condition=tuple(d["condition"]) if d["condition"] else None,
    )


_KIND_RANGES = {
    "GPLearnClf": (("n_pop", 10, 300), ("n_gens", 10, 300)),
    "CartesianClf": (("n_rows", 1, 10), ("n_columns", 10, 100), ("maxiter", 50, 500)),
    "ClaSyCo": (("n_pop", 10, 300), ("n_gens", 10, 300)),
}


def classifier_search_space(kinds=None) -> list[ParamSpec]:
    """The classifier-as-hyperparameter space: a top-level `classifier` choice
    plus conditional `<Classifier>_<param>` integers for each kind."""
    kinds = tuple(kinds) if kinds is not None else CLASSIFIER_KINDS
    unknown = [k for k in kinds if k not in CLASSIFIER_KINDS]
    if unknown or not kinds:
        raise ValueError(f"classifier kinds must be a nonempty subset of {CLASSIFIER_KINDS}")
    space = [categorical("classifier", kinds)]
    for kind in kinds:
        for pname, low, high in _KIND_RANGES[kind]:
            space.append(int_param(f"{kind}_{pname}", low, high, condition=("classifier", kind)))
    return space


def split_classifier_params(params: dict) -> tuple[str, dict]:
    """Split a sampled point into (kind, plain hyperparameter dict)."""
    kind = params["classifier"]
    prefix = f"{kind}_"
    return kind, {k[len(prefix):]: v for k, v in params.items() if k.startswith(prefix)}


def format_params(params: dict) -> str:
    """Render a sampled point, e.g. ``{'classifier': 'ClaSyCo', 'ClaSyCo_n_pop': 27}``."""
    return repr(dict(params))


def _draw_uniform(spec: ParamSpec, rng: np.random.Generator):
    if spec.kind == "categorical":
        return spec.choices[int(rng.integers(len(spec.choices)))]
    if spec.kind == "int":
        return int(rng.integers(int(spec.low), int(spec.high) + 1))
    if spec.log_scale:
        return float(np.exp(rng.uniform(np.log(spec.low), np.log(spec.high))))
    return float(rng.uniform(spec.low, spec.high))


def suggest_random(space, rng: np.random.Generator) -> dict:
    """Uniform draw over every active parameter, respecting conditions."""
    params: dict = {}
    for spec in space:
        if spec.active(params):
            params[spec.name] = _draw_uniform(spec, rng)
    return params


def _numeric_domain(spec: ParamSpec, values):
    """Map parameter values into the (possibly log) working domain."""
    arr = np.asarray(values, dtype=np.float64)
    lo, hi = float(spec.low), float(spec.high)
    if spec.log_scale:
        return np.log(arr), math.log(lo), math.log(hi)
    return arr, lo, hi


def _truncnorm_sample(mu: float, sigma: float, lo: float, hi: float, rng) -> float:
    a = ndtr((lo - mu) / sigma)
    b = ndtr((hi - mu) / sigma)
    u = rng.uniform(a, b)
    return float(mu + sigma * ndtri(u))


def _truncnorm_mixture_logpdf(x: np.ndarray, centers: np.ndarray, sigma: float, lo, hi):
    """log of the mean truncated-normal density over kernel centers."""
    z = (x[:, None] - centers[None, :]) / sigma
    norm = ndtr((hi - centers) / sigma) - ndtr((lo - centers) / sigma)
    norm = np.maximum(norm, 1e-300)
    pdf = np.exp(-0.5 * z * z) / (math.sqrt(2 * math.pi) * sigma * norm)
    return np.log(np.maximum(pdf.mean(axis=1), 1e-300))


def _suggest_numeric(spec, good_vals, bad_vals, rng):
    gv, lo, hi = _numeric_domain(spec, good_vals)
    bv, _, _ = _numeric_domain(spec, bad_vals)
    span = hi - lo
    if span <= 0:
        return _draw_uniform(spec, rng)
    bw_good = max(span / math.sqrt(len(gv)), MIN_BANDWIDTH_FACTOR * span)
    bw_bad = max(span / math.sqrt(len(bv)), MIN_BANDWIDTH_FACTOR * span)
    cands = np.empty(N_EI_CANDIDATES)
    for i in range(N_EI_CANDIDATES):
        center = float(gv[int(rng.integers(len(gv)))])
        cands[i] = _truncnorm_sample(center, bw_good, lo, hi, rng)
    ratio = _truncnorm_mixture_logpdf(cands, gv, bw_good, lo, hi) - _truncnorm_mixture_logpdf(
        cands, bv, bw_bad, lo, hi
    )
    x = float(cands[int(np.argmax(ratio))])
    if spec.log_scale:
        x = math.exp(x)
    x = min(max(x, spec.low), spec.high)
    if spec.kind == "int":
        return int(min(max(round(x), spec.low), spec.high))
    return float(x)


def _suggest_categorical(spec, good_vals, bad_vals, rng):
    choices = list(spec.choices)

    def smoothed(values):
        counts = np.array([values.count(c) + 1.0 for c in choices])
        return counts / counts.sum()

    p_good = smoothed(good_vals)
    p_bad = smoothed(bad_vals)
    idx = rng.choice(len(choices), size=N_EI_CANDIDATES, p=p_good)
    ratio = p_good[idx] / p_bad[idx]
    return choices[int(idx[int(np.argmax(ratio))])]


def suggest_tpe(space, history, rng: np.random.Generator) -> dict:
    """Density-ratio suggestion; behaves exactly like suggest_random until
    N_STARTUP complete trials exist."""
    complete = [t for t in history if t.state == "complete"]
    if len(complete) < N_STARTUP:
        return suggest_random(space, rng)
    n_good = max(1, math.ceil(GAMMA * len(complete)))
    ranked = sorted(complete, key=lambda t: (-t.score, t.trial_id))
    good, bad = ranked[:n_good], ranked[n_good:]

    params: dict = {}
    for spec in space:
        if not spec.active(params):
            continue
        good_vals = [t.params[spec.name] for t in good if spec.name in t.params]
        bad_vals = [t.params[spec.name] for t in bad if spec.name in t.params]
        if not good_vals or not bad_vals:
            params[spec.name] = _draw_uniform(spec, rng)
        elif spec.kind == "categorical":
            params[spec.name] = _suggest_categorical(spec, good_vals, bad_vals, rng)
        else:
            params[spec.name] = _suggest_numeric(spec, good_vals, bad_vals, rng)
    return params


def run_study(space, objective, n_trials: int = 100, sampler: str = "tpe", seed: int = 0) -> Study:
    """Sample, evaluate, and record n_trials sequentially.

    An objective exception, a non-finite score, or a score outside [0, 1]
    marks that trial failed without aborting the study.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    if sampler not in ("random", "tpe"):
        raise ValueError(f"unknown sampler {sampler!r}")
    rng = np.random.default_rng(seed)
    study = Study(space=list(space), sampler=sampler, seed=seed)
    for t in range(n_trials):
        if sampler == "random":
            params = suggest_random(space, rng)
        else:
            params = suggest_tpe(space, study.trials, rng)
        score: float | None
        try:
            score = float(objective(params))
            ok = math.isfinite(score) and 0.0 <= score <= 1.0
        except Exception:
            score, ok = None, False
        study.trials.append(
            Trial(t, params, score if ok else None, "complete" if ok else "failed")
        )
    if not study.complete_trials():
        raise RuntimeError("no complete trials")
    return study


def best_trial(study: Study) -> Trial:
    """Highest-scoring complete trial; ties keep the lowest trial_id."""
    complete = study.complete_trials()
    if not complete:
        raise RuntimeError("no complete trials")
    return max(complete, key=lambda t: (t.score, -t.trial_id))
