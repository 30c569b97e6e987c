"""Second-order Taylor jets for input-coordinate derivatives.

A ``Jet`` carries ``(value, d1, d2)`` where ``d1``/``d2`` are first and
second derivatives along seeded input directions. Components may be raw
ndarrays (pure evaluation, e.g. closed-form oracles) or ``Var`` tape nodes
(training: a reverse sweep over the recorded jet computation then yields
parameter gradients of losses built from the input derivatives).

Several directions propagate in one pass: ``d1``/``d2`` take an extra
leading axis of length K, which broadcasts against the value under numpy
rules. Seeding direction k means coordinate k starts as (x_k, 1, 0) and all
others as (x_j, 0, 0).

The math functions here (``tanh``, ``exp``, ...) accept a Jet, a Var, an
ndarray, or a plain float, so network code is written once.
"""

from __future__ import annotations

import numpy as np

from . import tape
from .tape import Var

_CONSTS = (int, float, np.integer, np.floating, np.ndarray, Var)


class Jet:
    """(value, d1, d2) triple obeying second-order Taylor propagation."""

    __slots__ = ("value", "d1", "d2")
    __array_ufunc__ = None

    def __init__(self, value, d1, d2=None):
        self.value = value
        self.d1 = d1
        self.d2 = d2  # None for first-order-only propagation

    def __repr__(self):
        return f"Jet(value={self.value!r}, d1={self.d1!r}, d2={self.d2!r})"

    # -- arithmetic; non-Jet operands are constants (zero derivatives) -------

    def __add__(self, other):
        if isinstance(other, Jet):
            d2 = None if self.d2 is None else self.d2 + other.d2
            return Jet(self.value + other.value, self.d1 + other.d1, d2)
        if isinstance(other, _CONSTS):
            return Jet(self.value + other, self.d1, self.d2)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            d2 = None if self.d2 is None else self.d2 - other.d2
            return Jet(self.value - other.value, self.d1 - other.d1, d2)
        if isinstance(other, _CONSTS):
            return Jet(self.value - other, self.d1, self.d2)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, _CONSTS):
            d2 = None if self.d2 is None else -self.d2
            return Jet(other - self.value, -self.d1, d2)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Jet):
            u, v = self, other
            d1 = u.d1 * v.value + u.value * v.d1
            d2 = None
            if u.d2 is not None:
                d2 = u.d2 * v.value + 2.0 * (u.d1 * v.d1) + u.value * v.d2
            return Jet(u.value * v.value, d1, d2)
        if isinstance(other, _CONSTS):
            d2 = None if self.d2 is None else self.d2 * other
            return Jet(self.value * other, self.d1 * other, d2)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * _reciprocal(other)
        if isinstance(other, _CONSTS):
            return self * (1.0 / other)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, _CONSTS):
            return _reciprocal(self) * other
        return NotImplemented

    def __neg__(self):
        return Jet(-self.value, -self.d1, None if self.d2 is None else -self.d2)

    def __pow__(self, p):
        if not isinstance(p, (int, float)):
            return NotImplemented
        x = self.value
        return _chain(self, x ** p, p * x ** (p - 1), p * (p - 1) * x ** (p - 2))

    def __matmul__(self, w):
        """Right-multiply by a constant matrix (linear, so componentwise)."""
        d2 = None if self.d2 is None else tape.matmul(self.d2, w)
        return Jet(tape.matmul(self.value, w), tape.matmul(self.d1, w), d2)

    def __getitem__(self, idx):
        d1 = self.d1[(Ellipsis,) + (idx if isinstance(idx, tuple) else (idx,))]
        d2 = None
        if self.d2 is not None:
            d2 = self.d2[(Ellipsis,) + (idx if isinstance(idx, tuple) else (idx,))]
        return Jet(self.value[idx], d1, d2)


def _chain(u: Jet, f0, f1, f2) -> Jet:
    """Compose a unary f with jet u given f(u), f'(u), f''(u)."""
    d1 = f1 * u.d1
    d2 = None
    if u.d2 is not None:
        d2 = f2 * (u.d1 * u.d1) + f1 * u.d2
    return Jet(f0, d1, d2)


def _reciprocal(u: Jet) -> Jet:
    x = u.value
    inv = 1.0 / x
    return _chain(u, inv, -inv * inv, 2.0 * inv * inv * inv)


def value_of(x):
    """Underlying value of a Jet (or the argument unchanged)."""
    return x.value if isinstance(x, Jet) else x


# -- elementwise functions, generic over Jet / Var / ndarray / float ---------


def exp(x):
    if isinstance(x, Jet):
        y = tape.exp(x.value)
        return _chain(x, y, y, y)
    return tape.exp(x) if isinstance(x, Var) else np.exp(x)


def sin(x):
    if isinstance(x, Jet):
        s, c = sin(x.value), cos(x.value)
        return _chain(x, s, c, -s)
    return tape.sin(x) if isinstance(x, Var) else np.sin(x)


def cos(x):
    if isinstance(x, Jet):
        s, c = sin(x.value), cos(x.value)
        return _chain(x, c, -s, -c)
    return tape.cos(x) if isinstance(x, Var) else np.cos(x)


def tanh(x):
    if isinstance(x, Jet):
        y = tanh(x.value)
        fp = 1.0 - y * y
        return _chain(x, y, fp, -2.0 * (y * fp))
    return tape.tanh(x) if isinstance(x, Var) else np.tanh(x)


def sigmoid(x):
    if isinstance(x, Jet):
        s = sigmoid(x.value)
        fp = s * (1.0 - s)
        return _chain(x, s, fp, fp * (1.0 - 2.0 * s))
    return tape.sigmoid(x)


def softplus(x):
    if isinstance(x, Jet):
        s = sigmoid(x.value)
        return _chain(x, softplus(x.value), s, s * (1.0 - s))
    return tape.softplus(x)


def sqrt(x):
    if isinstance(x, Jet):
        y = sqrt(x.value)
        inv = 1.0 / y
        return _chain(x, y, 0.5 * inv, -0.25 * (inv / x.value))
    return tape.sqrt(x) if isinstance(x, Var) else np.sqrt(x)


def clip_min(x, lo: float):
    if isinstance(x, Jet):
        ind = (value_of_array(x.value) > lo).astype(np.float64)
        return _chain(x, tape.clip_min(x.value, lo), ind, 0.0)
    return tape.clip_min(x, lo)


def value_of_array(x) -> np.ndarray:
    """Raw ndarray behind a Var (or the ndarray itself)."""
    return x.value if isinstance(x, Var) else np.asarray(x, dtype=np.float64)


def mean(x, axis: int = -1, keepdims: bool = False):
    """Mean along a feature axis; use negative axes so jets line up."""
    if isinstance(x, Jet):
        if axis >= 0:
            raise ValueError("use negative axes with jets")
        d2 = None
        if x.d2 is not None:
            d2 = tape.mean(x.d2, axis=axis, keepdims=keepdims)
        return Jet(
            tape.mean(x.value, axis=axis, keepdims=keepdims),
            tape.mean(x.d1, axis=axis, keepdims=keepdims),
            d2,
        )
    return tape.mean(x, axis=axis, keepdims=keepdims)


# -- seeding ------------------------------------------------------------------


def seed_input(x, order: int = 2, directions=None) -> Jet:
    """Seed a batch of input points [N, d] for jet propagation.

    Every requested coordinate direction is seeded at once: ``d1[k]`` is the
    one-hot basis vector for direction ``directions[k]``. ``order=1`` skips
    the second-derivative component entirely.
    """
    xv = value_of_array(x)
    n, d = xv.shape
    if directions is None:
        directions = range(d)
    directions = list(directions)
    k = len(directions)
    d1 = np.zeros((k, n, d))
    for i, c in enumerate(directions):
        d1[i, :, c] = 1.0
    d2 = np.zeros((k, n, d)) if order == 2 else None
    return Jet(x, d1, d2)


def seed_scalar(values, direction: int, order: int = 2) -> list:
    """Scalar jets for coordinates of one point; seeds ``direction`` only."""
    jets = []
    for k, v in enumerate(values):
        one = 1.0 if k == direction else 0.0
        jets.append(Jet(float(v), one, 0.0 if order == 2 else None))
    return jets


def jet_eval(f, x, direction: int, order: int = 2) -> Jet:
    """Evaluate ``f`` at ``x`` with coordinate ``direction`` seeded.

    Returns the jet (f(x), df/dx_k, d2f/dx_k2) exact to rounding. ``f`` must
    be built from the primitives of this module.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if not 0 <= direction < x.shape[-1]:
        raise ValueError(f"direction {direction} out of range for dim {x.shape[-1]}")
    out = f(seed_scalar(x, direction, order=order))
    if not isinstance(out, Jet):
        out = Jet(out, 0.0, 0.0 if order == 2 else None)
    return out
