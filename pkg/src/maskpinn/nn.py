"""Network construction: dense layers, activations, mask-gated blocks and the
baseline variants (vanilla MLP, residual skip, batch/layer norm, per-layer
adaptive activation scales).

All forward code is generic over raw ndarrays, tape ``Var`` nodes and ``Jet``
triples, so the same implementation serves fast evaluation, training and
input-derivative computation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import jets as J
from .tape import Var

ACTIVATIONS = ("tanh", "gelu", "silu", "softplus")
VARIANTS = ("vanilla", "resnet", "mask", "batchnorm", "layernorm", "laaf")

_GELU_C = 0.7978845608028654  # sqrt(2/pi)


def act_tanh(x):
    return J.tanh(x)


def act_gelu(x):
    # tanh form: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
    inner = _GELU_C * (x + 0.044715 * (x * x * x))
    return 0.5 * (x * (1.0 + J.tanh(inner)))


def act_silu(x):
    return x * J.sigmoid(x)


def act_softplus(x):
    return J.softplus(x)


_ACT_FNS = {
    "tanh": act_tanh,
    "gelu": act_gelu,
    "silu": act_silu,
    "softplus": act_softplus,
}


def activation_fn(name: str):
    try:
        return _ACT_FNS[name]
    except KeyError:
        raise ValueError(f"unknown activation {name!r}; expected one of {ACTIVATIONS}")


@dataclass(frozen=True)
class Architecture:
    """Descriptor for one network variant.

    ``depth`` counts hidden layers. For the mask variant it must be even:
    layers pair up into gated blocks of two.
    """

    variant: str
    depth: int
    width: int
    activation: str = "tanh"
    alpha_init: float = 1.0
    input_dim: int = 2
    output_dim: int = 1

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(
                f"unknown activation {self.activation!r}; expected one of {ACTIVATIONS}"
            )
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.width < 1:
            raise ValueError("width must be >= 1")
        if self.variant == "mask" and self.depth % 2 != 0:
            raise ValueError("mask variant needs an even depth (two layers per block)")
        if not 1 <= self.input_dim <= 2:
            raise ValueError("input_dim must be 1 or 2")


class DenseLayer(NamedTuple):
    weights: object  # [fan_out, fan_in]
    biases: object  # [fan_out]


class MaskLayer(NamedTuple):
    alpha: object  # [width]


class MaskBlock(NamedTuple):
    dense1: DenseLayer
    mask1: MaskLayer
    dense2: DenseLayer
    mask2: MaskLayer


# -- core ops -----------------------------------------------------------------


def mask_fn(z, alpha):
    """Learnable even gate 1 - exp(-(alpha*z)^2), in [0, 1) with F(0) = 0."""
    t = alpha * z
    return 1.0 - J.exp(-(t * t))


def dense_forward(layer: DenseLayer, h):
    wt = layer.weights.T if isinstance(layer.weights, np.ndarray) else _transpose(layer.weights)
    return (h @ wt) + layer.biases


def _transpose(w):
    from .tape import transpose

    return transpose(w)


def mask_block_forward(block: MaskBlock, h, act):
    """Two gated layers with a shortcut: returns h + F2(z2)*act(z2) path.

    With all alpha = 0 the gate is exactly zero and the block is the
    identity, bit for bit.
    """
    z1 = dense_forward(block.dense1, h)
    h1 = mask_fn(z1, block.mask1.alpha) * act(z1)
    z2 = dense_forward(block.dense2, h1)
    h2 = mask_fn(z2, block.mask2.alpha) * act(z2)
    return h + h2, (z1, z2)


def norm_forward(kind: str, z, gain, shift, eps: float = 1e-5, stats=None):
    """Batch or feature normalization followed by affine gain/shift.

    Batch statistics are computed from the jet value component and enter the
    input-derivative propagation as constants; parameter gradients still flow
    through them. ``stats=(mu, var)`` freezes the statistics explicitly
    (used by derivative checks so finite differences see the same function).
    Returns (normalized, (mu, var)).
    """
    from . import tape

    if kind == "batchnorm":
        if stats is not None:
            mu, var = stats
        else:
            v = J.value_of(z)
            if J.value_of_array(v).shape[-2] < 2:
                raise ValueError("batch normalization needs a batch of at least 2")
            mu = tape.mean(v, axis=-2, keepdims=True)
            var = tape.mean((v - mu) * (v - mu), axis=-2, keepdims=True)
        den = tape.sqrt(tape.clip_min(var, eps))
        return ((z - mu) / den) * gain + shift, (mu, var)
    if kind == "layernorm":
        if J.value_of_array(J.value_of(z)).shape[-1] < 2:
            raise ValueError("layer normalization needs at least 2 features")
        mu = J.mean(z, axis=-1, keepdims=True)
        d = z - mu
        var = J.mean(d * d, axis=-1, keepdims=True)
        den = J.sqrt(J.clip_min(var, eps))
        return (d / den) * gain + shift, (mu, var)
    raise ValueError(f"unknown normalization kind {kind!r}")


# -- parameters ----------------------------------------------------------------


def dense_dims(arch: Architecture) -> list[tuple[int, int]]:
    """(fan_in, fan_out) of every dense layer, head included."""
    d, w = arch.depth, arch.width
    if arch.variant == "mask":
        # linear stem projection, d gated layers, linear head
        dims = [(arch.input_dim, w)] + [(w, w)] * d + [(w, arch.output_dim)]
    else:
        dims = [(arch.input_dim, w)] + [(w, w)] * (d - 1) + [(w, arch.output_dim)]
    return dims


def init_params(arch: Architecture, seed) -> dict[str, Var]:
    """Glorot-uniform weights, zero biases; deterministic for a given seed.

    Mask gates start at ``arch.alpha_init``; adaptive activation scales at 1;
    normalization gains at 1 and shifts at 0.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    params: dict[str, Var] = {}
    for i, (fi, fo) in enumerate(dense_dims(arch)):
        bound = np.sqrt(6.0 / (fi + fo))
        params[f"w{i}"] = Var(rng.uniform(-bound, bound, size=(fo, fi)))
        params[f"b{i}"] = Var(np.zeros(fo))
    if arch.variant == "mask":
        for i in range(arch.depth):
            params[f"alpha{i}"] = Var(np.full(arch.width, arch.alpha_init))
    elif arch.variant == "laaf":
        for i in range(arch.depth):
            params[f"s{i}"] = Var(np.ones(1))
    elif arch.variant in ("batchnorm", "layernorm"):
        for i in range(arch.depth):
            params[f"g{i}"] = Var(np.ones(arch.width))
            params[f"c{i}"] = Var(np.zeros(arch.width))
    return params


def count_params(arch: Architecture) -> int:
    n = sum(fi * fo + fo for fi, fo in dense_dims(arch))
    if arch.variant == "mask":
        n += arch.depth * arch.width
    elif arch.variant == "laaf":
        n += arch.depth
    elif arch.variant in ("batchnorm", "layernorm"):
        n += 2 * arch.depth * arch.width
    return n


def _layer(params, i) -> DenseLayer:
    return DenseLayer(params[f"w{i}"], params[f"b{i}"])


# -- forward --------------------------------------------------------------------


def forward(arch: Architecture, params: dict, x, capture: bool = False, norm_stats=None):
    """Evaluate the network on a batch ``x`` of shape [N, input_dim].

    ``x`` may be an ndarray, a Var or a seeded Jet; parameters may hold Var
    (training) or plain arrays (fast evaluation). Returns ``(y, captures)``
    where ``captures`` lists each hidden layer's pre-activation values when
    requested, else None.

    ``norm_stats`` freezes batchnorm statistics (list of (mu, var) per hidden
    layer) so the network becomes a pointwise function of its input.
    """
    act = activation_fn(arch.activation)
    caps: list = [] if capture else None
    collected: list = []

    def grab(z):
        if capture:
            caps.append(np.array(J.value_of_array(J.value_of(z))))

    h = x
    v = arch.variant
    if v == "mask":
        h = dense_forward(_layer(params, 0), h)  # stem projection
        for b in range(arch.depth // 2):
            i1, i2 = 1 + 2 * b, 2 + 2 * b
            block = MaskBlock(
                _layer(params, i1),
                MaskLayer(params[f"alpha{2 * b}"]),
                _layer(params, i2),
                MaskLayer(params[f"alpha{2 * b + 1}"]),
            )
            h, (z1, z2) = mask_block_forward(block, h, act)
            grab(z1)
            grab(z2)
        y = dense_forward(_layer(params, arch.depth + 1), h)
        return y, caps
    if v == "resnet":
        z = dense_forward(_layer(params, 0), h)
        grab(z)
        h = act(z)
        i = 1
        while i + 1 < arch.depth:
            z1 = dense_forward(_layer(params, i), h)
            grab(z1)
            z2 = dense_forward(_layer(params, i + 1), act(z1))
            grab(z2)
            h = h + act(z2)
            i += 2
        while i < arch.depth:  # odd leftover hidden layer
            z = dense_forward(_layer(params, i), h)
            grab(z)
            h = act(z)
            i += 1
        return dense_forward(_layer(params, arch.depth), h), caps
    # vanilla / batchnorm / layernorm / laaf share the plain stack
    for i in range(arch.depth):
        z = dense_forward(_layer(params, i), h)
        grab(z)
        if v in ("batchnorm", "layernorm"):
            stats = None
            if norm_stats is not None and v == "batchnorm":
                stats = norm_stats[i]
            z, st = norm_forward(v, z, params[f"g{i}"], params[f"c{i}"], stats=stats)
            collected.append(st)
        elif v == "laaf":
            z = params[f"s{i}"] * z
        h = act(z)
    y = dense_forward(_layer(params, arch.depth), h)
    return y, caps


def collect_norm_stats(arch: Architecture, params: dict, x) -> list:
    """Batchnorm (mu, var) per hidden layer for a reference batch, as arrays."""
    if arch.variant != "batchnorm":
        return []
    stats = []
    act = activation_fn(arch.activation)
    h = np.asarray(x, dtype=np.float64)
    vals = {k: J.value_of_array(p if not isinstance(p, Var) else p.value) for k, p in params.items()}
    for i in range(arch.depth):
        z = h @ vals[f"w{i}"].T + vals[f"b{i}"]
        mu = z.mean(axis=-2, keepdims=True)
        var = ((z - mu) ** 2).mean(axis=-2, keepdims=True)
        stats.append((mu, var))
        zn = (z - mu) / np.sqrt(np.maximum(var, 1e-5)) * vals[f"g{i}"] + vals[f"c{i}"]
        h = np.asarray(J.value_of_array(activation_fn(arch.activation)(zn)))
    return stats


def param_values(params: dict) -> dict:
    """Detach parameters to raw arrays for tape-free evaluation."""
    return {k: (p.value if isinstance(p, Var) else p) for k, p in params.items()}
