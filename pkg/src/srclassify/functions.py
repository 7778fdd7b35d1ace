"""Protected function set shared by the tree and grid program representations.

All operators are total: for finite inputs they return finite outputs, with
division, square root, and logarithm guarded against illegal arguments.
Every operator accepts scalars or numpy arrays and broadcasts like numpy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

# Denominators / log arguments with magnitude at or below this trigger the
# guarded fallback instead of the raw operation.
GUARD_THRESHOLD = 1e-6

DIV_FALLBACK = 1.0
LOG_FALLBACK = 0.0


def protected_div(a, b):
    """a / b where |b| > 1e-6, else 1.0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    safe = np.abs(b) > GUARD_THRESHOLD
    out = np.full(np.broadcast(a, b).shape, DIV_FALLBACK)
    np.divide(a, b, out=out, where=safe)
    return out if out.ndim else float(out)


def protected_sqrt(a):
    """Square root of |a|."""
    a = np.asarray(a, dtype=np.float64)
    out = np.sqrt(np.abs(a))
    return out if out.ndim else float(out)


def protected_log(a):
    """ln|a| where |a| > 1e-6, else 0.0."""
    a = np.asarray(a, dtype=np.float64)
    mag = np.abs(a)
    safe = mag > GUARD_THRESHOLD
    out = np.full(mag.shape, LOG_FALLBACK)
    np.log(mag, out=out, where=safe)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class FunctionSpec:
    """One entry of the function set: name, arity, and vectorized callable."""

    name: str
    arity: int
    fn: Callable


FUNCTION_SET: tuple[FunctionSpec, ...] = (
    FunctionSpec("add", 2, np.add),
    FunctionSpec("sub", 2, np.subtract),
    FunctionSpec("mul", 2, np.multiply),
    FunctionSpec("div", 2, protected_div),
    FunctionSpec("sqrt", 1, protected_sqrt),
    FunctionSpec("log", 1, protected_log),
    FunctionSpec("abs", 1, np.abs),
    FunctionSpec("neg", 1, np.negative),
    FunctionSpec("min", 2, np.minimum),
    FunctionSpec("max", 2, np.maximum),
)

FUNCTIONS: dict[str, FunctionSpec] = {spec.name: spec for spec in FUNCTION_SET}

FUNCTION_NAMES: tuple[str, ...] = tuple(spec.name for spec in FUNCTION_SET)
