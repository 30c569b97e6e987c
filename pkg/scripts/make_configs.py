#!/usr/bin/env python3
"""Regenerate the shipped configs/ tree.

Desk-scale configs cover every benchmark x variant x activation cell at
budgets that finish in minutes on one CPU core.  Full-scale configs
transcribe the published benchmark setups; they are not run in CI.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from maskpinn.config import ExperimentConfig, dumps_config
from maskpinn.nn import ACTIVATIONS, VARIANTS, Architecture
from maskpinn.train import TrainConfig

ROOT = pathlib.Path(__file__).resolve().parents[1]

# Desk budgets, tuned so a 3-seed run of any single config stays under
# roughly half an hour on a slow core.
DESK = {
    "heat": dict(depth=4, width=64, iterations=5000,
                 n_collocation=256, n_ic=64, n_bc=64, log_every=100),
    "convection": dict(depth=3, width=128, iterations=10000,
                       n_collocation=512, n_ic=128, n_bc=128, log_every=500),
    "wave": dict(depth=4, width=64, iterations=3000,
                 n_collocation=512, n_ic=128, n_bc=128, log_every=100),
    "helmholtz": dict(depth=4, width=64, iterations=3000,
                      n_collocation=512, n_ic=64, n_bc=128, log_every=100),
}

# Full-scale setups as published: hidden layers x width, iterations.
FULL = {
    "convection": dict(hidden=13, width=256, iterations=50000),
    "wave": dict(hidden=7, width=256, iterations=20000),
    "helmholtz": dict(hidden=11, width=128, iterations=50000),
}


def mask_alpha(problem: str, activation: str) -> float:
    if problem == "helmholtz":
        return {"tanh": 5.0, "softplus": 2.0}.get(activation, 1.0)
    return 1.0


def mask_depth(dense_depth: int) -> int:
    """Gated-layer count matching a dense net of ``dense_depth`` hidden
    layers in parameter count: D hidden layers <-> (D - 1) / 2 blocks."""
    return dense_depth - 1 if dense_depth % 2 == 1 else dense_depth


def desk_config(problem: str, variant: str, activation: str) -> ExperimentConfig:
    d = DESK[problem]
    depth = mask_depth(d["depth"]) if variant == "mask" else d["depth"]
    arch = Architecture(
        variant=variant, depth=depth, width=d["width"], activation=activation,
        alpha_init=mask_alpha(problem, activation) if variant == "mask" else 1.0,
    )
    training = TrainConfig(
        iterations=d["iterations"], n_collocation=d["n_collocation"],
        n_ic=d["n_ic"], n_bc=d["n_bc"], log_every=d["log_every"],
    )
    tag = f"{problem}_{variant}_desk" if activation == "tanh" \
        else f"{problem}_{variant}_{activation}_desk"
    return ExperimentConfig(
        problem_name=problem, problem_params={}, arch=arch,
        training=training, trials=[0, 1, 2], output_dir=f"results/{tag}",
    ), tag


def full_config(problem: str, variant: str, activation: str) -> ExperimentConfig:
    f = FULL[problem]
    depth = f["hidden"] - 1 if variant == "mask" else f["hidden"]
    arch = Architecture(
        variant=variant, depth=depth, width=f["width"], activation=activation,
        alpha_init=mask_alpha(problem, activation) if variant == "mask" else 1.0,
    )
    training = TrainConfig(iterations=f["iterations"], log_every=1000)
    tag = f"{problem}_{variant}_{activation}_full"
    return ExperimentConfig(
        problem_name=problem, problem_params={}, arch=arch,
        training=training, trials=[0, 1, 2, 3, 4], output_dir=f"results/{tag}",
    ), tag


def main() -> None:
    desk_dir = ROOT / "configs"
    full_dir = ROOT / "configs" / "fullscale"
    full_dir.mkdir(parents=True, exist_ok=True)
    n = 0
    for problem in DESK:
        for variant in VARIANTS:
            for activation in ACTIVATIONS:
                cfg, tag = desk_config(problem, variant, activation)
                (desk_dir / f"{tag}.toml").write_text(dumps_config(cfg))
                n += 1
    for problem in FULL:
        for variant in ("vanilla", "mask"):
            for activation in ("tanh", "softplus"):
                cfg, tag = full_config(problem, variant, activation)
                (full_dir / f"{tag}.toml").write_text(dumps_config(cfg))
                n += 1
    print(f"wrote {n} configs under {desk_dir}")


if __name__ == "__main__":
    main()
