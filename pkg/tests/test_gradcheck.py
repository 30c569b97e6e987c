"""The checker itself needs checking: known-good derivatives must pass and a
deliberately corrupted derivative must be flagged."""

import numpy as np
import pytest

from maskpinn import jets
from maskpinn.gradcheck import (
    check_gradients, fd_param_gradient, max_rel_error_dict, rel_error,
)


def scalar_f(coords):
    x, y = coords
    return jets.sin(x) * jets.exp(y * 0.5) + x * y


def test_order1_passes():
    report = check_gradients(scalar_f, [0.3, -0.7], order=1)
    assert report.max_rel_error < 1e-8


def test_order2_passes():
    report = check_gradients(scalar_f, [0.3, -0.7], order=2)
    assert report.max_rel_error < 1e-5


def test_order2_stencil5_tighter():
    loose = check_gradients(scalar_f, [0.3, -0.7], order=2).max_rel_error
    tight = check_gradients(scalar_f, [0.3, -0.7], order=2, stencil5=True).max_rel_error
    assert tight < 1e-7
    assert tight <= loose


def test_detects_wrong_derivative():
    def broken(coords):
        x = coords[0]
        if isinstance(x, jets.Jet):
            # Correct value, corrupted first derivative.
            good = jets.sin(x)
            return jets.Jet(good.value, good.d1 * 1.1, good.d2)
        return jets.sin(x)

    report = check_gradients(broken, [0.9], order=1)
    assert report.max_rel_error > 1e-2


def test_rejects_bad_order_and_step():
    with pytest.raises(ValueError):
        check_gradients(scalar_f, [0.0, 0.0], order=3)
    with pytest.raises(ValueError):
        check_gradients(scalar_f, [0.0, 0.0], step=0.0)


def test_rel_error_conventions():
    assert rel_error(0.0, 0.0) == 0.0
    assert rel_error(1.0, 0.0) == 1.0
    assert rel_error(2.0, 1.0) == pytest.approx(0.5)


def test_fd_param_gradient_quadratic():
    params = {"w": np.array([1.0, -2.0]), "b": np.array(0.5)}

    def loss(p):
        return float(np.sum(p["w"] ** 2) + 3.0 * p["b"])

    g = fd_param_gradient(loss, params)
    np.testing.assert_allclose(g["w"], [2.0, -4.0], atol=1e-6)
    np.testing.assert_allclose(g["b"], 3.0, atol=1e-6)


def test_max_rel_error_dict_floors_zero_entries():
    a = {"w": np.array([1.0, 0.0])}
    b = {"w": np.array([1.0, 1e-7])}  # FD noise on an exactly-zero gradient
    assert max_rel_error_dict(a, b) < 1e-3
    c = {"w": np.array([1.2, 0.0])}
    assert max_rel_error_dict(a, c) > 0.1
