"""Composite physics loss, Adam optimization, and the training loop.

The loss is a weighted sum of mean squared initial, boundary and interior
residual violations over fixed point sets, so for a given seed it is a
deterministic function of the parameters. Divergence (a non-finite loss or
gradient) ends the run with a recorded iteration index; it is a result, not
a crash.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import jets as J
from . import nn, pde, tape
from .diagnostics import preact_snapshot, relative_l2
from .tape import Var


class DivergenceError(RuntimeError):
    """Raised internally when a loss component turns non-finite."""

    def __init__(self, component: str, iteration: int):
        super().__init__(f"non-finite {component} at iteration {iteration}")
        self.component = component
        self.iteration = iteration


@dataclass
class TrainConfig:
    iterations: int
    lr: float = 1e-3
    lambda_ic: float = 1.0
    lambda_bc: float = 1.0
    lambda_r: float = 1.0
    n_collocation: int = 10000
    n_ic: int = 256
    n_bc: int = 256
    seed: int = 0
    log_every: int = 100
    eval_grid: tuple | None = None  # falls back to the problem default
    probe_size: int = 1024

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        lams = (self.lambda_ic, self.lambda_bc, self.lambda_r)
        if any(l < 0 for l in lams):
            raise ValueError("loss weights must be nonnegative")
        if not any(l > 0 for l in lams):
            raise ValueError("at least one loss weight must be positive")


@dataclass
class AdamState:
    m: dict
    v: dict
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def init(cls, params: dict) -> "AdamState":
        zeros = lambda p: np.zeros_like(p.value if isinstance(p, Var) else p)
        return cls(m={k: zeros(p) for k, p in params.items()},
                   v={k: zeros(p) for k, p in params.items()})


@dataclass
class MetricsRow:
    iteration: int
    loss_total: float
    loss_ic: float
    loss_bc: float
    loss_r: float
    rel_l2: float
    wall_ms: float


@dataclass
class TrainResult:
    params: dict
    metrics: list
    preact: list
    status: str  # "converged" | "diverged"
    diverged_at: int | None = None

    @property
    def final_rel_l2(self) -> float:
        return self.metrics[-1].rel_l2 if self.metrics else float("nan")


def _msq(r):
    """Mean of elementwise squares (generic over Var / ndarray)."""
    return tape.mean(r * r)


def total_loss(arch: nn.Architecture, params: dict, problem: pde.Problem,
               samples: pde.SampleSet, cfg: TrainConfig, field_eval=None):
    """Weighted composite loss; returns (total, components dict).

    ``field_eval`` overrides the residual-side evaluator (oracle injection);
    it must match the network on the condition terms, so it is only used with
    closed-form fields in tests.
    """
    coords = problem.coords
    if field_eval is None:
        field_eval = pde.network_field_fn(arch, params, coords)

    components = {}
    # interior residual
    r = pde.residual_batch(problem, field_eval, samples.collocation)
    components["loss_r"] = _msq(r)
    # initial conditions
    if samples.ic_points is not None:
        f_ic = field_eval(samples.ic_points, 1 if problem.ic_velocity else 0)
        ic_term = _msq(f_ic.u - samples.ic_values)
        if problem.ic_velocity:
            ic_term = ic_term + _msq(f_ic.d1["t"])
        components["loss_ic"] = ic_term
    else:
        components["loss_ic"] = 0.0
    # boundary conditions
    if samples.bc_pairs is not None:
        left, right = samples.bc_pairs
        u_l = field_eval(left, 0).u
        u_r = field_eval(right, 0).u
        components["loss_bc"] = _msq(u_l - u_r)
    elif samples.bc_points is not None:
        u_b = field_eval(samples.bc_points, 0).u
        components["loss_bc"] = _msq(u_b - samples.bc_values)
    else:
        components["loss_bc"] = 0.0
    total = (cfg.lambda_ic * components["loss_ic"]
             + cfg.lambda_bc * components["loss_bc"]
             + cfg.lambda_r * components["loss_r"])
    return total, components


def adam_step(params: dict, grads: dict, state: AdamState, lr: float) -> None:
    """Standard bias-corrected Adam update, in place."""
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for k, p in params.items():
        g = grads[k]
        if not np.all(np.isfinite(g)):
            raise DivergenceError(f"gradient[{k}]", t)
        state.m[k] = b1 * state.m[k] + (1.0 - b1) * g
        state.v[k] = b2 * state.v[k] + (1.0 - b2) * (g * g)
        m_hat = state.m[k] / c1
        v_hat = state.v[k] / c2
        p.value -= lr * m_hat / (np.sqrt(v_hat) + state.eps)


def _float(x) -> float:
    return float(np.asarray(J.value_of_array(x)).reshape(()))


def train(problem: pde.Problem, arch: nn.Architecture, cfg: TrainConfig) -> TrainResult:
    """Full-batch Adam on the composite loss with periodic metric logging.

    All randomness (init, sampling, probe batch) flows from ``cfg.seed``.
    """
    if arch.input_dim != 2:
        raise ValueError("benchmarks use 2 input coordinates")
    rng = np.random.default_rng(cfg.seed)
    params = nn.init_params(arch, rng)
    samples = pde.sample_points(problem, (cfg.n_collocation, cfg.n_ic, cfg.n_bc), rng)
    (x_lo, x_hi), (t_lo, t_hi) = problem.bounds
    probe = np.column_stack([
        rng.uniform(x_lo, x_hi, cfg.probe_size),
        rng.uniform(t_lo, t_hi, cfg.probe_size),
    ])
    grid_pts, grid_exact = pde.eval_grid_points(problem, cfg.eval_grid)

    metrics: list[MetricsRow] = []
    preact_rows: list = []
    t0 = time.perf_counter()

    def log(iteration: int) -> None:
        vals = nn.param_values(params)
        total, comps = total_loss(arch, vals, problem, samples, cfg)
        pred, _ = nn.forward(arch, vals, grid_pts)
        err = relative_l2(np.asarray(pred), grid_exact)
        _, caps = nn.forward(arch, vals, probe, capture=True)
        preact_rows.extend(preact_snapshot(caps, iteration))
        metrics.append(MetricsRow(
            iteration=iteration,
            loss_total=_float(total),
            loss_ic=_float(comps["loss_ic"]),
            loss_bc=_float(comps["loss_bc"]),
            loss_r=_float(comps["loss_r"]),
            rel_l2=err,
            wall_ms=(time.perf_counter() - t0) * 1e3,
        ))

    log(0)
    state = AdamState.init(params)
    status, diverged_at = "converged", None
    for it in range(1, cfg.iterations + 1):
        try:
            loss, comps = total_loss(arch, params, problem, samples, cfg)
            lval = _float(loss)
            if not np.isfinite(lval):
                bad = next((k for k, v in comps.items() if not np.isfinite(_float(v))),
                           "loss_total")
                raise DivergenceError(bad, it)
            grads = tape.grad(loss, params)
            adam_step(params, grads, state, cfg.lr)
        except DivergenceError as err:
            status, diverged_at = "diverged", it
            break
        if it % cfg.log_every == 0 or it == cfg.iterations:
            log(it)
    return TrainResult(params=params, metrics=metrics, preact=preact_rows,
                       status=status, diverged_at=diverged_at)
