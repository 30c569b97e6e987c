"""Experiment runner CLI.

Subcommands:
    run         --config <path> [--out <dir>]
    sweep-width --config <path> --widths <list> [--out <dir>]
    check       [--filter <name>]
    plot        --in <dir> --out <dir>

Exit codes: 0 success, 1 config error, 2 oracle-check failure,
3 all trials diverged.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, config_hash, dumps_config, load_config
from .diagnostics import width_sweep

METRICS_COLUMNS = ("iter", "loss_total", "loss_ic", "loss_bc", "loss_r", "rel_l2", "wall_ms")
PREACT_COLUMNS = ("iter", "layer", "mean", "var", "min", "max") + tuple(
    f"bin_{i}" for i in range(66)
)
SWEEP_COLUMNS = ("width", "variant", "activation", "seed", "final_rel_l2", "status")


def _f(x: float) -> str:
    return repr(float(x))


def write_metrics_csv(path: Path, metrics) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(METRICS_COLUMNS) + "\n")
        for m in metrics:
            fh.write(",".join([
                str(m.iteration), _f(m.loss_total), _f(m.loss_ic), _f(m.loss_bc),
                _f(m.loss_r), _f(m.rel_l2), _f(m.wall_ms),
            ]) + "\n")


def write_preact_csv(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(PREACT_COLUMNS) + "\n")
        for r in rows:
            cells = [str(r.iteration), str(r.layer), _f(r.mean), _f(r.var),
                     _f(r.min), _f(r.max)] + [str(int(c)) for c in r.hist]
            fh.write(",".join(cells) + "\n")


def write_sweep_csv(path: Path, cells) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(SWEEP_COLUMNS) + "\n")
        for c in cells:
            err = "" if c.status != "converged" else _f(c.final_rel_l2)
            fh.write(f"{c.width},{c.variant},{c.activation},{c.seed},{err},{c.status}\n")


def resolve_output_dir(base: Path) -> Path:
    """Never overwrite: version the directory if it already holds results."""
    if not base.exists() or not any(base.iterdir()):
        return base
    n = 2
    while True:
        candidate = base.parent / f"{base.name}-v{n}"
        if not candidate.exists() or not any(candidate.iterdir()):
            return candidate
        n += 1


def _exec_trials(cfg: ExperimentConfig, out_dir: Path):
    """Train every trial seed; returns (manifest lines, results)."""
    from .train import train

    problem = cfg.problem()
    results = []
    manifest = [
        f"engine_version: {__version__}",
        f"config_hash: {config_hash(cfg)}",
    ]
    for seed in cfg.trials:
        trial_dir = out_dir / f"trial_{seed}"
        trial_dir.mkdir(parents=True, exist_ok=True)
        result = train(problem, cfg.arch, replace(cfg.training, seed=seed))
        write_metrics_csv(trial_dir / "metrics.csv", result.metrics)
        write_preact_csv(trial_dir / "preact.csv", result.preact)
        status = "converged" if result.status == "converged" else f"diverged@{result.diverged_at}"
        manifest.append(f"trial {seed}: {status} {trial_dir / 'metrics.csv'}")
        results.append((seed, result))
    return manifest, results


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    out_dir = resolve_output_dir(Path(args.out or cfg.output_dir))
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.toml").write_text(dumps_config(cfg), encoding="utf-8")
    manifest, results = _exec_trials(cfg, out_dir)
    finals = [r.final_rel_l2 for _, r in results if r.status == "converged"]
    with open(out_dir / "summary.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("seed,final_rel_l2,status\n")
        for seed, r in results:
            err = _f(r.final_rel_l2) if r.status == "converged" else ""
            fh.write(f"{seed},{err},{r.status}\n")
        if finals:
            fh.write(f"mean,{_f(float(np.mean(finals)))},\n")
    (out_dir / "manifest.txt").write_text("\n".join(manifest) + "\n", encoding="utf-8")
    print(f"wrote {out_dir}")
    if not finals:
        print("all trials diverged", file=sys.stderr)
        return 3
    print(f"mean final rel_l2 over {len(finals)} trial(s): {float(np.mean(finals)):.3e}")
    return 0


def cmd_sweep_width(args) -> int:
    try:
        cfg = load_config(args.config)
        widths = [int(w) for w in args.widths.split(",") if w.strip()]
    except (ConfigError, OSError, ValueError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    if not widths:
        print("config error: --widths must list at least one width", file=sys.stderr)
        return 1
    out_dir = resolve_output_dir(Path(args.out or cfg.output_dir))
    out_dir.mkdir(parents=True, exist_ok=True)
    problem = cfg.problem()
    result = width_sweep(problem, cfg.arch.variant, cfg.arch.activation,
                         widths, cfg.trials, cfg.training)
    write_sweep_csv(out_dir / "sweep.csv", result.cells)
    (out_dir / "manifest.txt").write_text(
        f"engine_version: {__version__}\nconfig_hash: {config_hash(cfg)}\n"
        f"widths: {widths}\n", encoding="utf-8")
    print(f"wrote {out_dir / 'sweep.csv'}")
    if all(c.status != "converged" for c in result.cells):
        return 3
    return 0


def cmd_check(args) -> int:
    from .checks import run_checks

    results = run_checks(args.filter)
    failed = False
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failed = failed or not ok
    if not results:
        print(f"no checks match filter {args.filter!r}", file=sys.stderr)
        return 2
    return 2 if failed else 0


def cmd_plot(args) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    in_dir, out_dir = Path(args.indir), Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    made = []

    metric_files = sorted(in_dir.glob("trial_*/metrics.csv"))
    if metric_files:
        fig, ax = plt.subplots(figsize=(6, 4))
        for mf in metric_files:
            data = np.genfromtxt(mf, delimiter=",", names=True)
            ax.semilogy(np.atleast_1d(data["iter"]), np.atleast_1d(data["rel_l2"]),
                        label=mf.parent.name)
        ax.set_xlabel("iteration")
        ax.set_ylabel("relative L2 error")
        ax.legend()
        fig.savefig(out_dir / "rel_l2.svg")
        plt.close(fig)
        made.append("rel_l2.svg")

    preact_files = sorted(in_dir.glob("trial_*/preact.csv"))
    if preact_files:
        fig, ax = plt.subplots(figsize=(6, 4))
        data = np.genfromtxt(preact_files[0], delimiter=",", names=True)
        layers = np.unique(np.atleast_1d(data["layer"]))
        for layer in layers:
            sel = np.atleast_1d(data["layer"]) == layer
            ax.plot(np.atleast_1d(data["iter"])[sel], np.atleast_1d(data["var"])[sel],
                    label=f"layer {int(layer)}")
        ax.set_xlabel("iteration")
        ax.set_ylabel("pre-activation variance")
        ax.legend(fontsize=7)
        fig.savefig(out_dir / "preact_variance.svg")
        plt.close(fig)
        made.append("preact_variance.svg")

    sweep_file = in_dir / "sweep.csv"
    if sweep_file.exists():
        rows = np.genfromtxt(sweep_file, delimiter=",", names=True,
                             dtype=None, encoding="utf-8")
        rows = np.atleast_1d(rows)
        fig, ax = plt.subplots(figsize=(6, 4))
        widths = sorted(set(int(r["width"]) for r in rows))
        means = []
        for w in widths:
            errs = [float(r["final_rel_l2"]) for r in rows
                    if int(r["width"]) == w and r["status"] == "converged"]
            means.append(np.mean(errs) if errs else np.nan)
        ax.loglog(widths, means, marker="o")
        ax.set_xlabel("width")
        ax.set_ylabel("mean final relative L2 error")
        fig.savefig(out_dir / "width_sweep.svg")
        plt.close(fig)
        made.append("width_sweep.svg")

    if not made:
        print(f"nothing to plot under {in_dir}", file=sys.stderr)
        return 1
    print(f"wrote {', '.join(made)} to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maskpinn", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute all trials of one experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("sweep-width", help="one sub-run per (width, seed)")
    p.add_argument("--config", required=True)
    p.add_argument("--widths", required=True, help="comma-separated widths")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_sweep_width)

    p = sub.add_parser("check", help="run the verification suite")
    p.add_argument("--filter", default=None)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("plot", help="render SVG summaries from result CSVs")
    p.add_argument("--in", dest="indir", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_plot)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
