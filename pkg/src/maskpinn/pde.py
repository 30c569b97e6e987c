"""The four PDE benchmarks: residual operators, conditions, exact solutions
and point sampling.

A residual operator consumes a ``FieldDerivs`` bundle (solution value plus
first/second derivatives per coordinate), so the same operator runs against
a network (jets through the tape) or against a closed-form oracle (jets over
plain arrays). That shared path is what the manufactured-solution gate
exploits: the exact solution wrapped as a field must zero the residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import jets as J
from . import nn

PI = math.pi


@dataclass
class FieldDerivs:
    """Solution value and its input derivatives at a batch of points."""

    u: object  # [N, 1]
    d1: dict  # coord name -> [N, 1]
    d2: dict  # coord name -> [N, 1] (second derivative, same coordinate)


@dataclass(frozen=True)
class Problem:
    name: str
    coords: tuple[str, str]
    bounds: tuple[tuple[float, float], tuple[float, float]]
    order: int  # highest input-derivative order in the residual
    params: dict
    residual: Callable  # (FieldDerivs, pts [N,2]) -> [N,1]
    exact: Callable  # pts [N,2] -> [N,1]
    eval_grid: tuple[int, int]
    has_ic: bool = True
    ic_velocity: bool = False  # additionally enforce du/dt = 0 at t=0
    bc_kind: str = "dirichlet"  # or "periodic" in the first coordinate
    ic_fn: Optional[Callable] = None  # x [N,1] -> u0 [N,1]


@dataclass
class SampleSet:
    """Fixed training point sets; all randomness comes from the seed."""

    collocation: np.ndarray  # [N_r, 2]
    ic_points: Optional[np.ndarray]  # [N_ic, 2] at t = t_lo
    ic_values: Optional[np.ndarray]
    bc_points: Optional[np.ndarray]  # Dirichlet points, all faces stacked
    bc_values: Optional[np.ndarray]
    bc_pairs: Optional[tuple[np.ndarray, np.ndarray]]  # periodic (left, right)


# -- closed forms --------------------------------------------------------------


def _cols(pts):
    """Split a batch (ndarray or seeded Jet) into coordinate columns."""
    if isinstance(pts, J.Jet):
        return pts[:, 0:1], pts[:, 1:2]
    pts = np.asarray(pts, dtype=np.float64)
    return pts[:, 0:1], pts[:, 1:2]


def heat_exact(pts):
    x, t = _cols(pts)
    return J.sin(PI * x) * J.exp((-PI * PI) * t)


def convection_exact(pts, beta: float):
    # method-of-characteristics transport of the sin initial profile
    x, t = _cols(pts)
    return J.sin(x - beta * t)


def wave_exact(pts, c: float):
    x, t = _cols(pts)
    return J.sin(PI * x) * J.cos((c * PI) * t)


def helmholtz_exact(pts, a1: float, a2: float):
    x, y = _cols(pts)
    return J.sin((a1 * PI) * x) * J.sin((a2 * PI) * y)


def helmholtz_source(pts, a1: float, a2: float, k: float, squared: bool = True):
    """Source term matching u = sin(a1 pi x) sin(a2 pi y).

    The consistent coefficients are -(a1 pi)^2 and -(a2 pi)^2; the unsquared
    variant is kept only so the verification gate can demonstrate it fails.
    """
    x, y = _cols(pts)
    s = np.sin(a1 * PI * np.asarray(J.value_of_array(J.value_of(x)))) * np.sin(
        a2 * PI * np.asarray(J.value_of_array(J.value_of(y)))
    )
    if squared:
        coef = -((a1 * PI) ** 2) - ((a2 * PI) ** 2) + k * k
    else:
        coef = -(a1 * PI) - (a2 * PI) + k * k
    return coef * s


# -- residual operators ---------------------------------------------------------


def heat_residual_op(f: FieldDerivs, pts):
    return f.d1["t"] - f.d2["x"]


def convection_residual_op(f: FieldDerivs, pts, beta: float):
    return f.d1["t"] + beta * f.d1["x"]


def wave_residual_op(f: FieldDerivs, pts, c: float):
    return f.d2["t"] - (c * c) * f.d2["x"]


def helmholtz_residual_op(f: FieldDerivs, pts, a1, a2, k, squared: bool = True):
    q = helmholtz_source(pts, a1, a2, k, squared=squared)
    return f.d2["x"] + f.d2["y"] + (k * k) * f.u - q


# -- problem registry ------------------------------------------------------------


def make_problem(name: str, **overrides) -> Problem:
    """Build one of the named benchmarks; ``overrides`` adjusts parameters."""
    if name == "heat":
        p = dict(overrides)
        _reject_unknown(p, (), name)
        return Problem(
            name="heat",
            coords=("x", "t"),
            bounds=((0.0, 1.0), (0.0, 1.0)),
            order=2,
            params={},
            residual=heat_residual_op,
            exact=heat_exact,
            eval_grid=(101, 101),
            ic_fn=lambda x: J.sin(PI * x),
        )
    if name == "convection":
        p = {"beta": 30.0}
        p.update(overrides)
        _reject_unknown(p, ("beta",), name)
        beta = float(p["beta"])
        return Problem(
            name="convection",
            coords=("x", "t"),
            bounds=((0.0, 2.0 * PI), (0.0, 1.0)),
            order=1,
            params={"beta": beta},
            residual=lambda f, pts: convection_residual_op(f, pts, beta),
            exact=lambda pts: convection_exact(pts, beta),
            eval_grid=(256, 101),
            bc_kind="periodic",
            ic_fn=lambda x: J.sin(x),
        )
    if name == "wave":
        p = {"c": 1.0}
        p.update(overrides)
        _reject_unknown(p, ("c",), name)
        c = float(p["c"])
        return Problem(
            name="wave",
            coords=("x", "t"),
            bounds=((0.0, 1.0), (0.0, 5.0)),
            order=2,
            params={"c": c},
            residual=lambda f, pts: wave_residual_op(f, pts, c),
            exact=lambda pts: wave_exact(pts, c),
            eval_grid=(101, 251),
            ic_velocity=True,
            ic_fn=lambda x: J.sin(PI * x),
        )
    if name == "helmholtz":
        p = {"a1": 6.0, "a2": 6.0, "k": 1.0}
        p.update(overrides)
        _reject_unknown(p, ("a1", "a2", "k"), name)
        a1, a2, k = float(p["a1"]), float(p["a2"]), float(p["k"])
        return Problem(
            name="helmholtz",
            coords=("x", "y"),
            bounds=((-1.0, 1.0), (-1.0, 1.0)),
            order=2,
            params={"a1": a1, "a2": a2, "k": k},
            residual=lambda f, pts: helmholtz_residual_op(f, pts, a1, a2, k),
            exact=lambda pts: helmholtz_exact(pts, a1, a2),
            eval_grid=(101, 101),
            has_ic=False,
        )
    raise ValueError(f"unknown problem {name!r}")


PROBLEM_NAMES = ("heat", "convection", "wave", "helmholtz")


def _reject_unknown(p: dict, allowed, name):
    for key in p:
        if key not in allowed:
            raise ValueError(f"unknown parameter {key!r} for problem {name!r}")


# -- field evaluators -------------------------------------------------------------


def field_from_jet(out: J.Jet, coords, order: int) -> FieldDerivs:
    d1 = {c: out.d1[i] for i, c in enumerate(coords)}
    d2 = {c: out.d2[i] for i, c in enumerate(coords)} if order == 2 else {}
    return FieldDerivs(out.value, d1, d2)


def network_field(arch: nn.Architecture, params: dict, pts, order: int) -> FieldDerivs:
    """Jet evaluation of a network over a batch, all coordinates seeded."""
    x = J.seed_input(np.asarray(pts, dtype=np.float64), order=order)
    out, _ = nn.forward(arch, params, x)
    return field_from_jet(out, ("x", "t")[: arch.input_dim], order)


def closed_form_field(fn: Callable, pts, coords, order: int) -> FieldDerivs:
    """Jet evaluation of a closed form u(pts); the oracle side of the gate."""
    x = J.seed_input(np.asarray(pts, dtype=np.float64), order=order)
    out = fn(x)
    return field_from_jet(out, coords, order)


def network_field_fn(arch, params, coords):
    """Evaluator (pts, order) -> FieldDerivs; order 0 skips jets entirely."""

    def evaluate(pts, order):
        pts = np.asarray(pts, dtype=np.float64)
        if order == 0:
            y, _ = nn.forward(arch, params, pts)
            return FieldDerivs(y, {}, {})
        x = J.seed_input(pts, order=order)
        out, _ = nn.forward(arch, params, x)
        return field_from_jet(out, coords, order)

    return evaluate


def closed_form_field_fn(fn: Callable, coords):
    """Same evaluator protocol, but for a closed-form solution ``fn``.

    ``fn`` receives the seeded input batch (a Jet over plain arrays) and must
    be written with the jets-module primitives; this is the oracle side of
    the manufactured-solution gate.
    """

    def evaluate(pts, order):
        pts = np.asarray(pts, dtype=np.float64)
        if order == 0:
            out = fn(pts)
            return FieldDerivs(np.asarray(J.value_of(out)), {}, {})
        out = fn(J.seed_input(pts, order=max(order, 1)))
        return field_from_jet(out, coords, order)

    return evaluate


def residual_batch(problem: Problem, field_eval: Callable, pts) -> np.ndarray:
    """Residual values at ``pts`` given an evaluator (pts, order) -> FieldDerivs."""
    f = field_eval(pts, problem.order)
    r = problem.residual(f, pts)
    return r


def exact_solution(problem: Problem, point) -> float:
    """Closed-form solution value at one point."""
    pts = np.asarray(point, dtype=np.float64).reshape(1, 2)
    return float(np.asarray(problem.exact(pts))[0, 0])


# -- sampling ----------------------------------------------------------------------


def sample_points(problem: Problem, counts: tuple[int, int, int], seed) -> SampleSet:
    """Uniform random collocation/IC/BC sets, deterministic per seed.

    ``counts`` is (N_r, N_ic, N_bc) with N_bc per boundary face (per periodic
    pair for the periodic case).
    """
    n_r, n_ic, n_bc = counts
    if min(counts) < 1:
        raise ValueError("sampling counts must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    (x_lo, x_hi), (t_lo, t_hi) = problem.bounds
    collocation = np.column_stack(
        [rng.uniform(x_lo, x_hi, n_r), rng.uniform(t_lo, t_hi, n_r)]
    )
    ic_points = ic_values = None
    if problem.has_ic:
        xs = rng.uniform(x_lo, x_hi, n_ic)
        ic_points = np.column_stack([xs, np.full(n_ic, t_lo)])
        ic_values = np.asarray(problem.ic_fn(xs[:, None]))
    bc_points = bc_values = bc_pairs = None
    if problem.bc_kind == "periodic":
        ts = rng.uniform(t_lo, t_hi, n_bc)
        left = np.column_stack([np.full(n_bc, x_lo), ts])
        right = np.column_stack([np.full(n_bc, x_hi), ts])
        bc_pairs = (left, right)
    else:
        faces = []
        ts = rng.uniform(t_lo, t_hi, n_bc)
        faces.append(np.column_stack([np.full(n_bc, x_lo), ts]))
        ts = rng.uniform(t_lo, t_hi, n_bc)
        faces.append(np.column_stack([np.full(n_bc, x_hi), ts]))
        if not problem.has_ic:
            # no time axis: the second coordinate is spatial, close all 4 faces
            xs = rng.uniform(x_lo, x_hi, n_bc)
            faces.append(np.column_stack([xs, np.full(n_bc, t_lo)]))
            xs = rng.uniform(x_lo, x_hi, n_bc)
            faces.append(np.column_stack([xs, np.full(n_bc, t_hi)]))
        bc_points = np.vstack(faces)
        bc_values = np.zeros((bc_points.shape[0], 1))
    return SampleSet(collocation, ic_points, ic_values, bc_points, bc_values, bc_pairs)


def eval_grid_points(problem: Problem, grid: tuple[int, int] | None = None):
    """Uniform tensor grid over the domain plus exact values on it."""
    nx, nt = grid or problem.eval_grid
    (x_lo, x_hi), (t_lo, t_hi) = problem.bounds
    xs = np.linspace(x_lo, x_hi, nx)
    ts = np.linspace(t_lo, t_hi, nt)
    xx, tt = np.meshgrid(xs, ts, indexing="ij")
    pts = np.column_stack([xx.ravel(), tt.ravel()])
    return pts, np.asarray(problem.exact(pts))
