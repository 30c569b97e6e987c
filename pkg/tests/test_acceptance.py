"""Acceptance suite.

Ten gates: autodiff oracles, manufactured solutions, the mask property
battery, desk-scale training runs (heat, convection, wave), two qualitative
feature-distribution reproductions, a width sweep, determinism, and the
`check` command.

Training-backed gates are expensive (hours of single-core CPU in total), so
every run is cached under tests/acceptance_cache/ keyed by a hash of its
exact configuration; delete the directory to force recomputation. Each test
prints the measured numbers next to its threshold so a failure is
diagnosable from the pytest output alone.
"""

import hashlib
import json
import subprocess
import sys
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

from maskpinn import checks, nn, pde
from maskpinn.nn import Architecture
from maskpinn.train import TrainConfig, train

CACHE = Path(__file__).parent / "acceptance_cache"
SEEDS = (0, 1, 2)

# Desk-scale budgets. Collocation counts are far below the full-scale
# defaults so a full pass stays tractable on one CPU core; the qualitative
# claims under test survive the reduction.
HEAT = dict(problem="heat", width=64, iterations=5000,
            n_collocation=512, n_ic=256, n_bc=256, log_every=100)
CONV = dict(problem="convection", width=128, iterations=10000,
            n_collocation=512, n_ic=128, n_bc=128, log_every=500)
WAVE = dict(problem="wave", width=64, iterations=3000,
            n_collocation=512, n_ic=128, n_bc=128, log_every=100)
# Width sweep: short budget, milder transport speed so that runs at every
# width leave the noise floor within the iteration budget.
SWEEP = dict(problem="convection", problem_params={"beta": 10.0},
             iterations=1500, n_collocation=128, n_ic=64, n_bc=64,
             log_every=750, eval_grid=(128, 51))
SWEEP_WIDTHS = (16, 64, 256, 1024)


def desk_run(problem, variant, depth, width, activation, seed, iterations,
             n_collocation, n_ic, n_bc, log_every, problem_params=None,
             alpha_init=1.0, eval_grid=None):
    """Train one desk-scale cell, memoized on disk."""
    key = dict(problem=problem, problem_params=problem_params or {},
               variant=variant, depth=depth, width=width,
               activation=activation, alpha_init=alpha_init, seed=seed,
               iterations=iterations, n_collocation=n_collocation,
               n_ic=n_ic, n_bc=n_bc, log_every=log_every,
               eval_grid=list(eval_grid) if eval_grid else None)
    digest = hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()[:20]
    path = CACHE / f"{digest}.json"
    if path.exists():
        return json.loads(path.read_text())
    prob = pde.make_problem(problem, **(problem_params or {}))
    arch = Architecture(variant, depth=depth, width=width,
                        activation=activation, alpha_init=alpha_init)
    cfg = TrainConfig(iterations=iterations, n_collocation=n_collocation,
                      n_ic=n_ic, n_bc=n_bc, seed=seed, log_every=log_every,
                      eval_grid=tuple(eval_grid) if eval_grid else None)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = train(prob, arch, cfg)
    out = {
        "key": key,
        "status": res.status,
        "final_rel_l2": res.final_rel_l2,
        "iters": [m.iteration for m in res.metrics],
        "loss_total": [m.loss_total for m in res.metrics],
        "rel_l2": [m.rel_l2 for m in res.metrics],
        "preact_var": [[r.iteration, r.layer, r.var] for r in res.preact],
    }
    CACHE.mkdir(exist_ok=True)
    path.write_text(json.dumps(out))
    return out


def heat_runs(variant, depth):
    return [desk_run(variant=variant, depth=depth, activation="tanh",
                     seed=s, **HEAT) for s in SEEDS]


# -- 1. autodiff oracle ----------------------------------------------------------

def test_criterion_1_autodiff_oracle():
    ok1, msg1 = checks.check_input_derivatives()
    print(f"input derivatives: {msg1}")
    assert ok1, msg1
    ok2, msg2 = checks.check_parameter_gradients()
    print(f"parameter gradients: {msg2}")
    assert ok2, msg2


# -- 2. manufactured solutions ------------------------------------------------

def test_criterion_2_manufactured_solutions():
    ok, msg = checks.check_manufactured_solutions()
    print(f"manufactured solutions: {msg}")
    assert ok, msg
    ok_reg, msg_reg = checks.check_helmholtz_source_regression()
    print(f"source regression pin: {msg_reg}")
    assert ok_reg, msg_reg


# -- 3. mask property battery ----------------------------------------------------

def test_criterion_3_mask_battery():
    t0 = time.perf_counter()
    ok, msg = checks.check_mask_battery()
    dt = time.perf_counter() - t0
    print(f"mask battery: {msg} ({dt * 1e3:.0f} ms)")
    assert ok, msg
    assert dt < 1.0, f"battery took {dt:.2f}s, budget is 1s"


# -- 4. heat desk thresholds -----------------------------------------------------

def test_criterion_4_heat_desk_thresholds():
    mask = heat_runs("mask", depth=4)  # 2 blocks
    vanilla = heat_runs("vanilla", depth=4)
    m_errs = [r["final_rel_l2"] for r in mask]
    v_errs = [r["final_rel_l2"] for r in vanilla]
    m_mean, v_mean = float(np.mean(m_errs)), float(np.mean(v_errs))
    print(f"heat mask  finals {m_errs} mean {m_mean:.3e} (< 1e-2)")
    print(f"heat vanilla finals {v_errs} mean {v_mean:.3e} (< 1e-2)")
    assert all(r["status"] == "converged" for r in mask + vanilla)
    assert m_mean < 1e-2
    assert v_mean < 1e-2


# -- 5. batchnorm / layernorm qualitative ------------------------------------------

def test_criterion_5_norm_variants_qualitative():
    bn = heat_runs("batchnorm", depth=4)
    ln = heat_runs("layernorm", depth=4)
    vanilla = heat_runs("vanilla", depth=4)

    bn_pattern = []
    for r in bn:
        i100 = r["iters"].index(100)
        loss_drop = r["loss_total"][i100] / max(r["loss_total"][-1], 1e-300)
        err_gain = (r["rel_l2"][i100] - r["rel_l2"][-1]) / r["rel_l2"][i100]
        bn_pattern.append(loss_drop >= 10.0 and err_gain < 0.20)
        print(f"bn seed: loss drop {loss_drop:.1f}x, rel_l2 improvement "
              f"{err_gain * 100:.1f}% -> {'flat' if bn_pattern[-1] else 'NOT flat'}")
    assert sum(bn_pattern) >= 2, "batchnorm stalled-error pattern not in majority"

    ln_pattern = []
    for r_ln, r_v in zip(ln, vanilla):
        assert r_ln["status"] == "converged"
        ln_pattern.append(r_ln["final_rel_l2"] > r_v["final_rel_l2"])
        print(f"ln {r_ln['final_rel_l2']:.3e} vs vanilla {r_v['final_rel_l2']:.3e}")
    assert sum(ln_pattern) >= 2, "layernorm not worse than vanilla in majority"


# -- 6. convection/softplus contrast -----------------------------------------------

def test_criterion_6_convection_softplus_contrast():
    mask = [desk_run(variant="mask", depth=2, activation="softplus",
                     seed=s, **CONV) for s in SEEDS]
    vanilla = [desk_run(variant="vanilla", depth=3, activation="softplus",
                        seed=s, **CONV) for s in SEEDS]
    m_mean = float(np.mean([r["final_rel_l2"] for r in mask]))
    v_mean = float(np.mean([r["final_rel_l2"] for r in vanilla]))
    print(f"convection/softplus mask {m_mean:.3e} vanilla {v_mean:.3e} "
          f"ratio {v_mean / m_mean:.1f}x (need >= 5x)")
    assert all(r["status"] == "converged" for r in mask)
    assert v_mean >= 5.0 * m_mean


# -- 7. wave variance control ------------------------------------------------------

def max_layer_var_trace(run):
    """Per log step, the maximum pre-activation variance over layers."""
    by_iter = {}
    for iteration, _, var in run["preact_var"]:
        by_iter[iteration] = max(by_iter.get(iteration, 0.0), var)
    its = sorted(by_iter)
    return np.array(its, dtype=float), np.array([by_iter[i] for i in its])


def test_criterion_7_wave_variance_control():
    mask = [desk_run(variant="mask", depth=4, activation="tanh",
                     seed=s, **WAVE) for s in SEEDS]
    vanilla = [desk_run(variant="vanilla", depth=4, activation="tanh",
                        seed=s, **WAVE) for s in SEEDS]
    lower_final = []
    flat_tail = []
    for rm, rv in zip(mask, vanilla):
        _, vm = max_layer_var_trace(rm)
        _, vv = max_layer_var_trace(rv)
        lower_final.append(vm[-1] < vv[-1])
        # Last-quartile slope of the mask trace, normalized by its level;
        # "<= 0 within noise" = no more than +5% drift across the quartile.
        its, trace = max_layer_var_trace(rm)
        q = len(trace) - max(2, len(trace) // 4)
        slope = np.polyfit(its[q:], trace[q:], 1)[0]
        drift = slope * (its[-1] - its[q]) / max(np.mean(trace[q:]), 1e-12)
        flat_tail.append(drift <= 0.05)
        print(f"wave: mask final max-var {vm[-1]:.3f} vs vanilla {vv[-1]:.3f}; "
              f"mask tail drift {drift * 100:+.1f}%")
    assert sum(lower_final) >= 2, "mask max variance not below vanilla in majority"
    assert sum(flat_tail) >= 2, "mask variance tail rising in majority"


# -- 8. width sweep ----------------------------------------------------------------

def sweep_cell(variant, activation, width, seed):
    depth = 2 if variant == "mask" else 3
    return desk_run(variant=variant, depth=depth, width=width,
                    activation=activation, seed=seed, **SWEEP)


def sweep_means(variant, activation):
    means = []
    for w in SWEEP_WIDTHS:
        errs = [sweep_cell(variant, activation, w, s)["final_rel_l2"]
                for s in (0, 1)]
        means.append(float(np.mean(errs)))
    return means


def test_criterion_8_width_sweep_directions():
    mask_ok = 0
    vanilla_ok = 0
    for act in nn.ACTIVATIONS:
        m = sweep_means("mask", act)
        v = sweep_means("vanilla", act)
        # Non-increasing with 2% numerical slack between adjacent widths.
        mono = all(m[i + 1] <= m[i] * 1.02 for i in range(3))
        degrade = v[-1] > min(v) * 1.02
        mask_ok += mono
        vanilla_ok += degrade
        print(f"{act:9s} mask {['%.3e' % x for x in m]} non-increasing={mono}")
        print(f"{act:9s} vanl {['%.3e' % x for x in v]} degrades@1024={degrade}")
    print(f"mask monotone for {mask_ok}/4 (need >= 3); "
          f"vanilla degrades for {vanilla_ok}/4 (need >= 2)")
    assert mask_ok >= 3
    assert vanilla_ok >= 2


# -- 9. determinism ----------------------------------------------------------------

def test_criterion_9_bit_identical_metrics(tmp_path):
    from maskpinn import cli

    cfg = tmp_path / "cfg.toml"
    cfg.write_text("""
[problem]
name = "heat"
[architecture]
variant = "mask"
depth = 2
width = 8
activation = "tanh"
[training]
iterations = 50
n_collocation = 64
n_ic = 16
n_bc = 16
log_every = 10
eval_grid = [16, 16]
trials = [0]
[output]
output_dir = "%s"
""" % (tmp_path / "out"))
    assert cli.main(["run", "--config", str(cfg)]) == 0
    assert cli.main(["run", "--config", str(cfg)]) == 0
    a = (tmp_path / "out" / "trial_0" / "metrics.csv").read_text().splitlines()
    b = (tmp_path / "out-v2" / "trial_0" / "metrics.csv").read_text().splitlines()
    assert len(a) == len(b) == 7
    # Bit-identical apart from the wall-clock column, which measures the
    # host rather than the computation.
    for ra, rb in zip(a, b):
        assert ra.rsplit(",", 1)[0] == rb.rsplit(",", 1)[0]


# -- 10. check command -------------------------------------------------------------

def test_criterion_10_check_command_fast_and_green():
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "maskpinn.cli", "check"],
                          capture_output=True, text=True)
    dt = time.perf_counter() - t0
    print(proc.stdout)
    print(f"check command: exit {proc.returncode} in {dt:.1f}s (< 60s)")
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert "FAIL" not in proc.stdout
    assert dt < 60.0
