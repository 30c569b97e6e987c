"""Built-in verification suite: derivative checks against finite differences,
manufactured-solution residual gates, and the mask-function property battery.

Each check returns (ok, detail). The CLI ``check`` subcommand runs them all
and exits nonzero on any failure.
"""

from __future__ import annotations

import numpy as np

from . import jets as J
from . import nn, pde, tape
from .gradcheck import check_gradients, fd_param_gradient, max_rel_error_dict
from .train import TrainConfig, total_loss

FD_TOL_ORDER1 = 1e-6
FD_TOL_ORDER2 = 1e-5
FD_TOL_PARAMS = 1e-5
GATE_TOL_RESIDUAL = 1e-6
GATE_TOL_CONDITION = 1e-10


def net_point_fn(arch: nn.Architecture, values: dict, norm_stats=None):
    """Wrap a network as f(coords) usable with ``check_gradients``.

    Accepts scalar jets or floats per coordinate and evaluates a batch of
    one. Batchnorm statistics must be frozen (``norm_stats``) so the network
    is a pointwise function of its input.
    """

    def f(coords):
        if isinstance(coords[0], J.Jet):
            val = np.array([[float(c.value) for c in coords]])
            d1 = np.array([[[float(c.d1) for c in coords]]])
            order2 = coords[0].d2 is not None
            d2 = np.array([[[float(c.d2) for c in coords]]]) if order2 else None
            h = J.Jet(val, d1, d2)
            y, _ = nn.forward(arch, values, h, norm_stats=norm_stats)
            return J.Jet(
                float(np.asarray(y.value)[0, 0]),
                float(np.asarray(y.d1)[0, 0, 0]),
                float(np.asarray(y.d2)[0, 0, 0]) if order2 else None,
            )
        x = np.array([[float(c) for c in coords]])
        y, _ = nn.forward(arch, values, x, norm_stats=norm_stats)
        return float(np.asarray(y)[0, 0])

    return f


def _tiny_arch(variant: str, activation: str, width: int = 8) -> nn.Architecture:
    depth = 2 if variant == "mask" else 3
    return nn.Architecture(variant, depth=depth, width=width, activation=activation)


def check_input_derivatives() -> tuple[bool, str]:
    """Jet derivatives vs central differences on every variant/activation."""
    worst1 = worst2 = 0.0
    worst_name = ""
    seed = 0
    for variant in nn.VARIANTS:
        for activation in nn.ACTIVATIONS:
            arch = _tiny_arch(variant, activation)
            values = nn.param_values(nn.init_params(arch, seed))
            seed += 1
            stats = None
            if variant == "batchnorm":
                rng = np.random.default_rng(seed)
                batch = rng.uniform(0.0, 1.0, size=(32, 2))
                stats = nn.collect_norm_stats(arch, values, batch)
            f = net_point_fn(arch, values, norm_stats=stats)
            x = np.array([0.37, 0.61])
            r1 = check_gradients(f, x, order=1)
            r2 = check_gradients(f, x, order=2, stencil5=True)
            if r1.max_rel_error > worst1:
                worst1, worst_name = r1.max_rel_error, f"{variant}/{activation}"
            worst2 = max(worst2, r2.max_rel_error)
    ok = worst1 < FD_TOL_ORDER1 and worst2 < FD_TOL_ORDER2
    return ok, f"order1 max {worst1:.3e} (worst {worst_name}), order2 max {worst2:.3e}"


def check_parameter_gradients() -> tuple[bool, str]:
    """Tape gradients of the composite loss vs brute-force finite differences."""
    worst = 0.0
    worst_name = ""
    seed = 100
    for variant in nn.VARIANTS:
        for activation in nn.ACTIVATIONS:
            # heat exercises order-2 jets; convection exercises periodic terms
            problem = pde.make_problem("convection" if variant == "mask" else "heat")
            arch = _tiny_arch(variant, activation, width=4)
            params = nn.init_params(arch, seed)
            samples = pde.sample_points(problem, (8, 4, 4), seed + 1)
            seed += 2
            cfg = TrainConfig(iterations=1, n_collocation=8, n_ic=4, n_bc=4)
            loss, _ = total_loss(arch, params, problem, samples, cfg)
            analytic = tape.grad(loss, params)
            values = nn.param_values(params)

            def loss_of(vals):
                l, _ = total_loss(arch, vals, problem, samples, cfg)
                return float(np.asarray(J.value_of_array(l)).reshape(()))

            fd = fd_param_gradient(loss_of, values)
            err = max_rel_error_dict(analytic, fd)
            if err > worst:
                worst, worst_name = err, f"{variant}/{activation}"
    return worst < FD_TOL_PARAMS, f"max rel err {worst:.3e} (worst {worst_name})"


def check_manufactured_solutions() -> tuple[bool, str]:
    """Exact solutions must zero the residuals and satisfy their conditions."""
    details = []
    ok = True
    for name in pde.PROBLEM_NAMES:
        problem = pde.make_problem(name)
        rng = np.random.default_rng(7)
        pts = np.column_stack([
            rng.uniform(*problem.bounds[0], 100),
            rng.uniform(*problem.bounds[1], 100),
        ])
        fe = pde.closed_form_field_fn(problem.exact, problem.coords)
        res = np.max(np.abs(np.asarray(pde.residual_batch(problem, fe, pts))))
        cond = _condition_violation(problem, rng)
        ok = ok and res < GATE_TOL_RESIDUAL and cond < GATE_TOL_CONDITION
        details.append(f"{name}: res {res:.2e} cond {cond:.2e}")
    return ok, "; ".join(details)


def _condition_violation(problem: pde.Problem, rng) -> float:
    """Worst exact-solution violation over 100 random IC/BC points."""
    samples = pde.sample_points(problem, (1, 100, 100), rng)
    worst = 0.0
    if samples.ic_points is not None:
        u = np.asarray(problem.exact(samples.ic_points))
        worst = max(worst, float(np.max(np.abs(u - samples.ic_values))))
        if problem.ic_velocity:
            fe = pde.closed_form_field_fn(problem.exact, problem.coords)
            f = fe(samples.ic_points, 1)
            worst = max(worst, float(np.max(np.abs(np.asarray(f.d1["t"])))))
    if samples.bc_pairs is not None:
        left, right = samples.bc_pairs
        gap = np.asarray(problem.exact(left)) - np.asarray(problem.exact(right))
        worst = max(worst, float(np.max(np.abs(gap))))
    if samples.bc_points is not None:
        u = np.asarray(problem.exact(samples.bc_points))
        worst = max(worst, float(np.max(np.abs(u - samples.bc_values))))
    return worst


def check_helmholtz_source_regression() -> tuple[bool, str]:
    """The source term without squared coefficients must fail the gate."""
    problem = pde.make_problem("helmholtz")
    a1, a2, k = (problem.params[s] for s in ("a1", "a2", "k"))
    rng = np.random.default_rng(11)
    pts = np.column_stack([rng.uniform(-1, 1, 100), rng.uniform(-1, 1, 100)])
    fe = pde.closed_form_field_fn(problem.exact, problem.coords)
    f = fe(pts, 2)
    bad = pde.helmholtz_residual_op(f, pts, a1, a2, k, squared=False)
    worst = float(np.max(np.abs(np.asarray(bad))))
    return worst > 1e-2, f"unsquared-source residual {worst:.3e} (must be >> 1e-6)"


def check_mask_battery(n: int = 10_000) -> tuple[bool, str]:
    """Gate-function properties over random samples plus the block identity."""
    # alpha*z is kept below ~5 so 1 - exp(-(alpha z)^2) stays strictly below
    # 1.0 in float64; mathematically F < 1 everywhere, but the exp underflows
    # past |alpha z| ~ 6 and the gate saturates to exactly 1.0
    rng = np.random.default_rng(3)
    z = rng.uniform(-3.0, 3.0, n)
    alpha = rng.uniform(0.1, 1.5, n) * rng.choice([-1.0, 1.0], n)
    f = np.asarray(nn.mask_fn(z, alpha))
    checks = []
    checks.append(("F(0)=0", np.all(np.asarray(nn.mask_fn(np.zeros(n), alpha)) == 0.0)))
    checks.append(("even", np.allclose(f, np.asarray(nn.mask_fn(-z, alpha)), rtol=0, atol=0)))
    checks.append(("range", bool(np.all((f >= 0.0) & (f < 1.0)))))
    # strict monotonicity in |z| for fixed alpha != 0
    z2 = z + np.sign(z) * rng.uniform(0.05, 0.5, n)
    f2 = np.asarray(nn.mask_fn(z2, alpha))
    checks.append(("monotone", bool(np.all(f2 > f))))
    # composite suppression |F * act| <= |act|
    for name in nn.ACTIVATIONS:
        s = np.asarray(J.value_of_array(nn.activation_fn(name)(z)))
        checks.append((f"suppression/{name}", bool(np.all(np.abs(f * s) <= np.abs(s)))))
    # block identity at alpha = 0, bit exact
    arch = nn.Architecture("mask", depth=2, width=16, alpha_init=0.0)
    values = nn.param_values(nn.init_params(arch, 5))
    h = rng.standard_normal((64, 16))
    block = nn.MaskBlock(
        nn.DenseLayer(values["w1"], values["b1"]), nn.MaskLayer(values["alpha0"]),
        nn.DenseLayer(values["w2"], values["b2"]), nn.MaskLayer(values["alpha1"]),
    )
    out, _ = nn.mask_block_forward(block, h, nn.activation_fn("tanh"))
    checks.append(("block-identity", bool(np.all(np.asarray(out) == h))))
    failed = [name for name, ok in checks if not ok]
    return not failed, ("all properties hold" if not failed else f"failed: {failed}")


def check_wave_initial_velocity() -> tuple[bool, str]:
    problem = pde.make_problem("wave")
    xs = np.linspace(0.0, 1.0, 50)
    pts = np.column_stack([xs, np.zeros_like(xs)])
    fe = pde.closed_form_field_fn(problem.exact, problem.coords)
    f = fe(pts, 1)
    worst = float(np.max(np.abs(np.asarray(f.d1["t"]))))
    return worst < 1e-12, f"max |du/dt| at t=0: {worst:.2e}"


ALL_CHECKS = [
    ("input-derivatives-vs-fd", check_input_derivatives),
    ("parameter-gradients-vs-fd", check_parameter_gradients),
    ("manufactured-solutions", check_manufactured_solutions),
    ("helmholtz-source-regression", check_helmholtz_source_regression),
    ("mask-property-battery", check_mask_battery),
    ("wave-initial-velocity", check_wave_initial_velocity),
]


def run_checks(name_filter: str | None = None):
    """Run (optionally filtered) checks; returns list of (name, ok, detail)."""
    results = []
    for name, fn in ALL_CHECKS:
        if name_filter and name_filter not in name:
            continue
        ok, detail = fn()
        results.append((name, ok, detail))
    return results
