"""Reverse-mode autodiff over numpy arrays.

A ``Var`` wraps a float64 ndarray together with the recorded operation that
produced it, so the chain of ``Var`` results *is* the tape: one call to
``backward`` on a scalar root accumulates gradients into every upstream
``Var``. Everything is double precision; second-derivative residuals amplify
rounding and leave no headroom for float32.

The module-level math functions (``exp``, ``tanh``, ...) dispatch on type so
the same network code runs on raw ndarrays (no tape, fast evaluation path) or
on ``Var`` (training path).
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

_SCALARS = (int, float, np.integer, np.floating, np.ndarray)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``g`` down to ``shape``, undoing numpy broadcasting."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


class Var:
    """One node on the tape: a value plus the local backward rule."""

    __slots__ = ("value", "grad", "_parents", "_vjp")

    # make ndarray <op> Var defer to our reflected dunders
    __array_ufunc__ = None

    def __init__(self, value, _parents=(), _vjp=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self._parents: tuple = _parents
        self._vjp: Callable | None = _vjp

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def __repr__(self):
        return f"Var(shape={self.value.shape})"

    # -- graph traversal ---------------------------------------------------

    def backward(self) -> None:
        """Reverse sweep: accumulate d(self)/d(leaf) into each leaf's .grad.

        ``self`` must be scalar (size 1). Gradients accumulate, so call
        ``zero_grad`` on the leaves between sweeps.
        """
        if self.value.size != 1:
            raise ValueError("backward() requires a scalar root")
        topo: list[Var] = []
        visited: set[int] = set()
        stack: list[tuple[Var, bool]] = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in visited:
                    stack.append((p, False))
        self.grad = np.ones_like(self.value)
        for node in reversed(topo):
            if node._vjp is None:
                continue
            gs = node._vjp(node.grad)
            for parent, g in zip(node._parents, gs):
                if g is None:
                    continue
                g = _unbroadcast(np.asarray(g, dtype=np.float64), parent.value.shape)
                parent.grad = g if parent.grad is None else parent.grad + g

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Var):
            return Var(self.value + other.value, (self, other), lambda g: (g, g))
        if isinstance(other, _SCALARS):
            return Var(self.value + other, (self,), lambda g: (g,))
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Var):
            return Var(self.value - other.value, (self, other), lambda g: (g, -g))
        if isinstance(other, _SCALARS):
            return Var(self.value - other, (self,), lambda g: (g,))
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, _SCALARS):
            return Var(other - self.value, (self,), lambda g: (-g,))
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Var):
            a, b = self.value, other.value
            return Var(a * b, (self, other), lambda g: (g * b, g * a))
        if isinstance(other, _SCALARS):
            return Var(self.value * other, (self,), lambda g: (g * other,))
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Var):
            a, b = self.value, other.value
            return Var(a / b, (self, other), lambda g: (g / b, -g * a / (b * b)))
        if isinstance(other, _SCALARS):
            return Var(self.value / other, (self,), lambda g: (g / other,))
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, _SCALARS):
            a = self.value
            return Var(other / a, (self,), lambda g: (-g * other / (a * a),))
        return NotImplemented

    def __neg__(self):
        return Var(-self.value, (self,), lambda g: (-g,))

    def __pow__(self, p):
        if not isinstance(p, (int, float)):
            return NotImplemented
        a = self.value
        return Var(a ** p, (self,), lambda g: (g * p * a ** (p - 1),))

    def __matmul__(self, other):
        if isinstance(other, (Var,) + _SCALARS):
            return matmul(self, other)
        return NotImplemented

    def __rmatmul__(self, other):
        if isinstance(other, _SCALARS):
            return matmul(other, self)
        return NotImplemented

    def __getitem__(self, idx):
        def vjp(g):
            out = np.zeros_like(self.value)
            np.add.at(out, idx, g)
            return (out,)

        return Var(self.value[idx], (self,), vjp)


def _as_value(x):
    return x.value if isinstance(x, Var) else np.asarray(x, dtype=np.float64)


def matmul(a, b):
    """Matrix product with numpy batching; gradients sum over broadcast axes."""
    if not isinstance(a, Var) and not isinstance(b, Var):
        return np.matmul(a, b)
    av, bv = _as_value(a), _as_value(b)
    out = np.matmul(av, bv)
    parents = tuple(x for x in (a, b) if isinstance(x, Var))

    def vjp(g):
        gs = []
        if isinstance(a, Var):
            gs.append(np.matmul(g, np.swapaxes(bv, -1, -2)))
        if isinstance(b, Var):
            gs.append(np.matmul(np.swapaxes(av, -1, -2), g))
        return tuple(gs)

    return Var(out, parents, vjp)


def transpose(a):
    if isinstance(a, Var):
        return Var(a.value.T, (a,), lambda g: (g.T,))
    return np.asarray(a).T


# -- reductions -------------------------------------------------------------


def vsum(a, axis=None, keepdims=False):
    if not isinstance(a, Var):
        return np.sum(a, axis=axis, keepdims=keepdims)
    shape = a.value.shape

    def vjp(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape),)

    return Var(np.sum(a.value, axis=axis, keepdims=keepdims), (a,), vjp)


def mean(a, axis=None, keepdims=False):
    if not isinstance(a, Var):
        return np.mean(a, axis=axis, keepdims=keepdims)
    n = a.value.size if axis is None else a.value.shape[axis]
    return vsum(a, axis=axis, keepdims=keepdims) * (1.0 / n)


# -- elementwise primitives --------------------------------------------------


def _unary(a, fval, dval):
    """Build a unary op: ``dval(x, y)`` gives f'(x) from input x and output y."""
    if not isinstance(a, Var):
        return fval(a)
    y = fval(a.value)
    return Var(y, (a,), lambda g: (g * dval(a.value, y),))


def exp(a):
    return _unary(a, np.exp, lambda x, y: y)


def sin(a):
    return _unary(a, np.sin, lambda x, y: np.cos(x))


def cos(a):
    return _unary(a, np.cos, lambda x, y: -np.sin(x))


def tanh(a):
    return _unary(a, np.tanh, lambda x, y: 1.0 - y * y)


def sigmoid(a):
    return _unary(a, expit, lambda x, y: y * (1.0 - y))


def softplus(a):
    # log(1 + e^x) via logaddexp: exact linear branch for large |x|.
    return _unary(a, lambda x: np.logaddexp(0.0, x), lambda x, y: expit(x))


def sqrt(a):
    return _unary(a, np.sqrt, lambda x, y: 0.5 / y)


def clip_min(a, lo: float):
    """max(a, lo); gradient is zero on the clamped region."""
    return _unary(
        a,
        lambda x: np.maximum(x, lo),
        lambda x, y: (x > lo).astype(np.float64),
    )


# -- parameter helpers --------------------------------------------------------


def zero_grad(params: dict) -> None:
    for p in params.values():
        p.grad = None


def grad(loss: Var, params: dict) -> dict:
    """Gradient of a scalar loss w.r.t. every entry of ``params``.

    Leaves untouched by the graph get zero gradients.
    """
    zero_grad(params)
    loss.backward()
    return {
        k: (p.grad if p.grad is not None else np.zeros_like(p.value))
        for k, p in params.items()
    }
