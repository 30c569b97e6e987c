"""Finite-difference verification of analytic derivatives.

Central differences are the independent oracle: they share no code with the
jet/tape machinery they check. Relative error uses the convention
|a - b| / max(|a|, |b|), with 0/0 mapped to 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .jets import Jet, jet_eval

DEFAULT_STEP = {1: 1e-5, 2: 1e-3}


@dataclass
class GradCheckReport:
    max_rel_error: float
    worst_coordinate: int
    order: int


def rel_error(a: float, b: float) -> float:
    denom = max(abs(a), abs(b))
    if denom == 0.0:
        return 0.0
    return abs(a - b) / denom


def _call_plain(f: Callable, x: np.ndarray) -> float:
    out = f([float(v) for v in x])
    if isinstance(out, Jet):
        out = out.value
    return float(out)


def check_gradients(f: Callable, x, order: int = 1, step: float | None = None,
                    stencil5: bool = False) -> GradCheckReport:
    """Compare jet derivatives of ``f`` against central differences.

    ``f`` takes a sequence of coordinates (floats or scalar jets) and returns
    a scalar. ``stencil5`` switches to the 5-point (4th-order) central
    stencil, which cuts truncation error when the target tolerance is tight.
    The report carries the worst coordinate; no tolerance is enforced here.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    h = DEFAULT_STEP[order] if step is None else step
    if h <= 0:
        raise ValueError("step must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    worst, worst_k = 0.0, 0
    for k in range(x.shape[0]):
        jet = jet_eval(f, x, k, order=order)
        analytic = float(jet.d1) if order == 1 else float(jet.d2)

        def at(delta: float) -> float:
            xs = x.copy()
            xs[k] += delta
            return _call_plain(f, xs)

        if stencil5:
            f2p, fp, fm, f2m = at(2 * h), at(h), at(-h), at(-2 * h)
            if order == 1:
                fd = (f2m - 8.0 * fm + 8.0 * fp - f2p) / (12.0 * h)
            else:
                f0 = at(0.0)
                fd = (-f2p + 16.0 * fp - 30.0 * f0 + 16.0 * fm - f2m) / (12.0 * h * h)
        else:
            fp, fm = at(h), at(-h)
            if order == 1:
                fd = (fp - fm) / (2.0 * h)
            else:
                fd = (fp - 2.0 * at(0.0) + fm) / (h * h)
        err = rel_error(analytic, fd)
        if err > worst:
            worst, worst_k = err, k
    return GradCheckReport(max_rel_error=worst, worst_coordinate=worst_k, order=order)


def fd_param_gradient(loss_fn: Callable, params: dict, step: float = 1e-6) -> dict:
    """Central-difference gradient of ``loss_fn(values)`` over a parameter
    dict of raw arrays. Brute force: two evaluations per scalar entry."""
    grads = {}
    for k, p in params.items():
        p = np.asarray(p, dtype=np.float64)
        g = np.zeros_like(p)
        flat = p.reshape(-1)
        gf = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            fp = loss_fn(params)
            flat[i] = orig - step
            fm = loss_fn(params)
            flat[i] = orig
            gf[i] = (fp - fm) / (2.0 * step)
        grads[k] = g
    return grads


def max_rel_error_dict(a: dict, b: dict) -> float:
    """Worst entrywise relative error between two gradient dicts.

    Entries are floored at 1e-3 of the overall gradient scale: entries whose
    true value is exactly zero (batchnorm biases cancel against the mean
    subtraction, for example) otherwise register finite-difference noise as
    order-one relative error.
    """
    scale = 0.0
    for k in a:
        scale = max(scale, float(np.max(np.abs(a[k]))), float(np.max(np.abs(b[k]))))
    floor = 1e-3 * scale
    worst = 0.0
    for k in a:
        av, bv = np.asarray(a[k]).ravel(), np.asarray(b[k]).ravel()
        denom = np.maximum(np.maximum(np.abs(av), np.abs(bv)), floor)
        if scale == 0.0:
            continue
        worst = max(worst, float(np.max(np.abs(av - bv) / denom)))
    return worst
