"""Second-order forward-jet tests.

The heavyweight oracle is sympy: for a battery of compositions we compare
jet first/second derivatives against exact symbolic differentiation at
random points. Agreement is required to 1e-10 relative.
"""

import numpy as np
import pytest
import sympy as sp

from maskpinn import jets
from maskpinn.jets import Jet, jet_eval, seed_input

X = sp.Symbol("x")

# (sympy expression, jet-side evaluator, admissible domain)
BATTERY = [
    (sp.sin(X), lambda x: jets.sin(x), (-3, 3)),
    (sp.cos(X**2), lambda x: jets.cos(x * x), (-2, 2)),
    (sp.exp(sp.sin(X)), lambda x: jets.exp(jets.sin(x)), (-3, 3)),
    (sp.tanh(3 * X), lambda x: jets.tanh(x * 3.0), (-2, 2)),
    (1 / (1 + sp.exp(-X)), lambda x: jets.sigmoid(x), (-4, 4)),
    (sp.log(1 + sp.exp(X)), lambda x: jets.softplus(x), (-4, 4)),
    (sp.sqrt(1 + X**2), lambda x: jets.sqrt(x * x + 1.0), (-3, 3)),
    (X**3 - 2 * X + 1, lambda x: x * x * x - x * 2.0 + 1.0, (-2, 2)),
    (sp.sin(X) * sp.exp(-X**2), lambda x: jets.sin(x) * jets.exp(-(x * x)), (-2, 2)),
    (sp.tanh(X) / (2 + sp.cos(X)), lambda x: jets.tanh(x) / (jets.cos(x) + 2.0), (-3, 3)),
]


@pytest.mark.parametrize("expr,fn,dom", BATTERY, ids=[str(b[0]) for b in BATTERY])
def test_sympy_battery_second_order(expr, fn, dom):
    d1 = sp.lambdify(X, sp.diff(expr, X), "numpy")
    d2 = sp.lambdify(X, sp.diff(expr, X, 2), "numpy")
    rng = np.random.default_rng(42)
    for v in rng.uniform(*dom, size=8):
        jet = jet_eval(lambda c: fn(c[0]), np.array([v]), 0, order=2)
        assert float(jet.d1) == pytest.approx(float(d1(v)), rel=1e-10, abs=1e-12)
        assert float(jet.d2) == pytest.approx(float(d2(v)), rel=1e-10, abs=1e-10)


def test_product_rule_second_order():
    # (fg)'' = f''g + 2f'g' + fg'' at a frozen point, f=sin, g=exp.
    v = 0.83
    jet = jet_eval(lambda c: jets.sin(c[0]) * jets.exp(c[0]), np.array([v]), 0)
    expected = (-np.sin(v) * np.exp(v) + 2 * np.cos(v) * np.exp(v)
                + np.sin(v) * np.exp(v))
    assert float(jet.d2) == pytest.approx(expected, rel=1e-12)


def test_constants_have_zero_derivatives():
    jet = jet_eval(lambda c: c[0] * 0.0 + 7.5, np.array([1.0]), 0)
    assert float(jet.value) == 7.5
    assert float(jet.d1) == 0.0
    assert float(jet.d2) == 0.0


def test_seed_input_shapes():
    x = np.random.default_rng(0).normal(size=(5, 2))
    h = seed_input(x, order=2)
    assert h.value.shape == (5, 2)
    assert h.d1.shape == (2, 5, 2)  # K directions lead
    assert h.d2.shape == (2, 5, 2)
    # One-hot seeding: direction k differentiates coordinate k.
    np.testing.assert_array_equal(h.d1[0, :, 0], np.ones(5))
    np.testing.assert_array_equal(h.d1[0, :, 1], np.zeros(5))
    np.testing.assert_array_equal(h.d1[1, :, 1], np.ones(5))
    np.testing.assert_array_equal(h.d2, np.zeros((2, 5, 2)))


def test_seed_input_order1():
    x = np.zeros((3, 2))
    h = seed_input(x, order=1)
    assert h.d2 is None


def test_order1_arithmetic_keeps_d2_none():
    h = seed_input(np.ones((2, 2)), order=1)
    out = jets.tanh(h * 2.0 + 1.0)
    assert out.d2 is None
    np.testing.assert_allclose(out.d1, 2 * (1 - np.tanh(3.0) ** 2) * seed_input(np.ones((2, 2)), order=1).d1)


def test_matmul_by_constant_matrix():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(4, 2))
    w = rng.normal(size=(2, 3))
    h = seed_input(x, order=2) @ w
    np.testing.assert_allclose(np.asarray(h.value), x @ w)
    # Linear map: first derivative in direction k is just row k of w.
    np.testing.assert_allclose(np.asarray(h.d1)[0], np.broadcast_to(w[0], (4, 3)))
    np.testing.assert_allclose(np.asarray(h.d2), np.zeros((2, 4, 3)))


def test_getitem_keeps_direction_axis():
    x = np.arange(6.0).reshape(3, 2)
    h = seed_input(x, order=2)
    col = h[:, 0:1]
    assert np.asarray(col.value).shape == (3, 1)
    assert np.asarray(col.d1).shape == (2, 3, 1)


def test_mean_negative_axis():
    x = np.arange(8.0).reshape(4, 2)
    h = seed_input(x, order=2)
    m = jets.mean(h * h, axis=-2)
    np.testing.assert_allclose(np.asarray(m.value), np.mean(x * x, axis=0))
    # Every batch row is seeded at once, so direction 0 of the mean of x^2
    # is mean(2 x[:, 0]) in output column 0 and zero in column 1.
    np.testing.assert_allclose(np.asarray(m.d1)[0], [np.mean(2 * x[:, 0]), 0.0])
    np.testing.assert_allclose(np.asarray(m.d1)[1], [0.0, np.mean(2 * x[:, 1])])
    # Second derivative of x^2 is the constant 2.
    np.testing.assert_allclose(np.asarray(m.d2)[0], [2.0, 0.0])


def test_value_of_array():
    h = seed_input(np.ones((2, 2)), order=1)
    np.testing.assert_array_equal(jets.value_of_array(h.value), np.ones((2, 2)))
    np.testing.assert_array_equal(jets.value_of_array(np.ones(3)), np.ones(3))
    from maskpinn.tape import Var
    np.testing.assert_array_equal(jets.value_of_array(Var(np.ones(3))), np.ones(3))


def test_dispatch_on_plain_arrays():
    # Module-level math functions also accept raw ndarrays.
    x = np.array([0.2, -1.1])
    np.testing.assert_allclose(jets.softplus(x), np.logaddexp(0.0, x))
    np.testing.assert_allclose(jets.sigmoid(x), 1 / (1 + np.exp(-x)))
