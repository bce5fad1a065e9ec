import math

import numpy as np
import pytest

from clkinetic.quadrature import QuadratureError, cell_rule, composite_nodes, integrate, integrate_2d, integrate_nd


def test_composite_rule_is_exact_for_polynomials():
    x, w = composite_nodes(-1.0, 2.0, 3, order=4)
    assert np.dot(w, x**7) == pytest.approx((2.0**8 - 1.0) / 8, rel=1e-13)


def test_integrate_gaussian_and_kinked_integrand():
    res = integrate(lambda x: np.exp(-x * x), -10, 10, tol=1e-13)
    assert res.converged
    assert res.value == pytest.approx(math.sqrt(math.pi), abs=1e-13)
    kink = integrate(lambda x: np.abs(x - 0.3), 0.0, 1.0, points=[0.3], tol=1e-14)
    assert kink.value == pytest.approx(0.5 * (0.3**2 + 0.7**2), abs=1e-14)


def test_non_convergence_is_reported_or_raised():
    f = lambda x: np.sin(1.0 / np.maximum(x, 1e-12))
    res = integrate(f, 0.0, 1.0, tol=1e-14, max_nodes=256)
    assert not res.converged and res.error == np.inf
    with pytest.raises(QuadratureError):
        integrate(f, 0.0, 1.0, tol=1e-14, max_nodes=256, raise_on_failure=True)


def test_tensor_rules_match_separable_products():
    r2 = integrate_2d(lambda x, y: np.exp(-x * x) * np.cos(y), (-8, 8), (0, 1), tol=1e-13)
    assert r2.value == pytest.approx(math.sqrt(math.pi) * math.sin(1.0), abs=1e-12)
    r3 = integrate_nd(lambda x, y, z: x * y * y * z**3 + 0 * x, [(0, 1), (0, 2), (0, 3)], tol=1e-12)
    assert r3.value == pytest.approx(0.5 * 8 / 3 * 81 / 4, rel=1e-12)


def test_cell_rule_shapes_and_weights():
    nodes, weights = cell_rule(np.array([0.0, 0.5, 2.0]), 5)
    assert nodes.shape == weights.shape == (2, 5)
    np.testing.assert_allclose(weights.sum(axis=1), [0.5, 1.5], rtol=1e-14)
