import math

import numpy as np
import pytest

from durrmeyer import quadrature


def test_piecewise_polynomial_exact():
    # |x|^3 on [-1, 2] split at the kink
    val = quadrature.integrate(lambda x: np.abs(x) ** 3, [-1, 0, 2])
    assert val == pytest.approx(0.25 + 4.0, abs=1e-14)


def test_split_pieces_respects_max_length():
    edges = quadrature.split_pieces([0.0, 5.0], max_length=2.0)
    assert np.all(np.diff(edges) <= 2.0 + 1e-15)
    assert edges[0] == 0.0 and edges[-1] == 5.0


def test_refinement_keeps_weights_summing_to_length():
    for refine in range(3):
        x, w = quadrature.composite_rule([-1.0, 0.0, 3.0], refine=refine)
        assert w.sum() == pytest.approx(4.0, abs=1e-14)
        assert np.all((x > -1) & (x < 3))


def test_tensor_rule_product():
    r1 = quadrature.composite_rule([0.0, 1.0])
    r2 = quadrature.composite_rule([0.0, 2.0])
    nodes, w = quadrature.tensor_rule([r1, r2])
    assert nodes.shape == (len(r1[0]) * len(r2[0]), 2)
    val = np.sum(w * nodes[:, 0] * nodes[:, 1] ** 2)
    assert val == pytest.approx(0.5 * 8 / 3, rel=1e-14)


def test_smooth_integrand():
    assert quadrature.integrate(np.exp, [0.0, 1.0]) == pytest.approx(math.e - 1, rel=1e-15)
