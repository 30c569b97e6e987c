"""TOML experiment configs and their (de)serialization.

Sections mirror the runtime types field by field:

    [problem]       name = "heat"        # plus parameter overrides
    [architecture]  variant, depth, width, activation, alpha_init, ...
    [training]      iterations, lr, lambda_*, n_*, log_every, trials, ...
    [output]        output_dir

Round-tripping a config through ``dumps_config`` / ``loads_config`` preserves
every field; the config hash is taken over the canonical dump.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import tomli

from .nn import ACTIVATIONS, VARIANTS, Architecture
from .pde import PROBLEM_NAMES, Problem, make_problem
from .train import TrainConfig

_PROBLEM_PARAM_KEYS = ("beta", "c", "a1", "a2", "k")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending key."""


@dataclass
class ExperimentConfig:
    problem_name: str
    problem_params: dict
    arch: Architecture
    training: TrainConfig
    trials: list
    output_dir: str = "out"

    def problem(self) -> Problem:
        return make_problem(self.problem_name, **self.problem_params)


def _expect(table: dict, section: str, key: str, types, default=None, required=False):
    if key not in table:
        if required:
            raise ConfigError(f"missing key [{section}].{key}")
        return default
    v = table[key]
    if not isinstance(v, types):
        raise ConfigError(f"bad type for [{section}].{key}: {type(v).__name__}")
    return v


def _reject_unknown(table: dict, section: str, allowed) -> None:
    for k in table:
        if k not in allowed:
            raise ConfigError(f"unknown key [{section}].{k}")


def loads_config(text: str) -> ExperimentConfig:
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as err:
        raise ConfigError(f"invalid TOML: {err}") from err
    _reject_unknown(raw, "", ("problem", "architecture", "training", "output"))

    prob = raw.get("problem", {})
    name = _expect(prob, "problem", "name", str, required=True)
    if name not in PROBLEM_NAMES:
        raise ConfigError(f"[problem].name: unknown problem {name!r}")
    _reject_unknown(prob, "problem", ("name",) + _PROBLEM_PARAM_KEYS)
    params = {k: float(prob[k]) for k in _PROBLEM_PARAM_KEYS if k in prob}
    try:
        make_problem(name, **params)
    except ValueError as err:
        raise ConfigError(f"[problem]: {err}") from err

    arch_t = raw.get("architecture", {})
    _reject_unknown(arch_t, "architecture",
                    ("variant", "depth", "width", "activation", "alpha_init",
                     "input_dim", "output_dim"))
    variant = _expect(arch_t, "architecture", "variant", str, required=True)
    if variant not in VARIANTS:
        raise ConfigError(f"[architecture].variant: unknown variant {variant!r}")
    activation = _expect(arch_t, "architecture", "activation", str, default="tanh")
    if activation not in ACTIVATIONS:
        raise ConfigError(f"[architecture].activation: unknown activation {activation!r}")
    try:
        arch = Architecture(
            variant=variant,
            depth=_expect(arch_t, "architecture", "depth", int, required=True),
            width=_expect(arch_t, "architecture", "width", int, required=True),
            activation=activation,
            alpha_init=float(_expect(arch_t, "architecture", "alpha_init", (int, float), default=1.0)),
            input_dim=_expect(arch_t, "architecture", "input_dim", int, default=2),
            output_dim=_expect(arch_t, "architecture", "output_dim", int, default=1),
        )
    except ValueError as err:
        raise ConfigError(f"[architecture]: {err}") from err

    tr = raw.get("training", {})
    _reject_unknown(tr, "training",
                    ("iterations", "lr", "lambda_ic", "lambda_bc", "lambda_r",
                     "n_collocation", "n_ic", "n_bc", "log_every", "eval_grid",
                     "probe_size", "trials"))
    trials = _expect(tr, "training", "trials", list, default=[0])
    if not trials or not all(isinstance(t, int) for t in trials):
        raise ConfigError("[training].trials must be a nonempty list of integer seeds")
    eval_grid = _expect(tr, "training", "eval_grid", list, default=None)
    if eval_grid is not None:
        if len(eval_grid) != 2 or not all(isinstance(g, int) for g in eval_grid):
            raise ConfigError("[training].eval_grid must be two integers")
        eval_grid = tuple(eval_grid)
    try:
        training = TrainConfig(
            iterations=_expect(tr, "training", "iterations", int, required=True),
            lr=float(_expect(tr, "training", "lr", (int, float), default=1e-3)),
            lambda_ic=float(_expect(tr, "training", "lambda_ic", (int, float), default=1.0)),
            lambda_bc=float(_expect(tr, "training", "lambda_bc", (int, float), default=1.0)),
            lambda_r=float(_expect(tr, "training", "lambda_r", (int, float), default=1.0)),
            n_collocation=_expect(tr, "training", "n_collocation", int, default=10000),
            n_ic=_expect(tr, "training", "n_ic", int, default=256),
            n_bc=_expect(tr, "training", "n_bc", int, default=256),
            log_every=_expect(tr, "training", "log_every", int, default=100),
            eval_grid=eval_grid,
            probe_size=_expect(tr, "training", "probe_size", int, default=1024),
        )
    except ValueError as err:
        raise ConfigError(f"[training]: {err}") from err

    out = raw.get("output", {})
    _reject_unknown(out, "output", ("output_dir",))
    output_dir = _expect(out, "output", "output_dir", str, default="out")

    return ExperimentConfig(
        problem_name=name,
        problem_params=params,
        arch=arch,
        training=training,
        trials=list(trials),
        output_dir=output_dir,
    )


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_config(fh.read())


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v)!r}")


def dumps_config(cfg: ExperimentConfig) -> str:
    """Canonical TOML text; stable key order so hashing is meaningful."""
    a, t = cfg.arch, cfg.training
    lines = ["[problem]", f"name = {_fmt(cfg.problem_name)}"]
    for k in _PROBLEM_PARAM_KEYS:
        if k in cfg.problem_params:
            lines.append(f"{k} = {_fmt(float(cfg.problem_params[k]))}")
    lines += [
        "",
        "[architecture]",
        f"variant = {_fmt(a.variant)}",
        f"depth = {_fmt(a.depth)}",
        f"width = {_fmt(a.width)}",
        f"activation = {_fmt(a.activation)}",
        f"alpha_init = {_fmt(float(a.alpha_init))}",
        f"input_dim = {_fmt(a.input_dim)}",
        f"output_dim = {_fmt(a.output_dim)}",
        "",
        "[training]",
        f"iterations = {_fmt(t.iterations)}",
        f"lr = {_fmt(float(t.lr))}",
        f"lambda_ic = {_fmt(float(t.lambda_ic))}",
        f"lambda_bc = {_fmt(float(t.lambda_bc))}",
        f"lambda_r = {_fmt(float(t.lambda_r))}",
        f"n_collocation = {_fmt(t.n_collocation)}",
        f"n_ic = {_fmt(t.n_ic)}",
        f"n_bc = {_fmt(t.n_bc)}",
        f"log_every = {_fmt(t.log_every)}",
        f"probe_size = {_fmt(t.probe_size)}",
    ]
    if t.eval_grid is not None:
        lines.append(f"eval_grid = {_fmt(list(t.eval_grid))}")
    lines.append(f"trials = {_fmt(list(cfg.trials))}")
    lines += ["", "[output]", f"output_dir = {_fmt(cfg.output_dir)}", ""]
    return "\n".join(lines)


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(dumps_config(cfg).encode("utf-8")).hexdigest()[:12]
