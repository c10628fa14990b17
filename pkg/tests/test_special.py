import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from durrmeyer.errors import DomainError
from durrmeyer.kernels import bessel_j_eval
from durrmeyer.special import (
    MAX_BESSEL_ORDER,
    bessel_crossover,
    bessel_j,
    bessel_j_scaled,
    bessel_modulus_bound,
    gamma,
)

# J0 first zero, frozen from mpmath.besseljzero(0, 1)
J0_ZERO = 2.404825557695773


def _mp_j(order, x):
    return float(mpmath.besselj(order, x))


def test_j0_at_origin():
    assert bessel_j_eval(0, 0) == 1.0


def test_half_order_closed_form_value():
    assert bessel_j_eval(0.5, math.pi / 2) == pytest.approx(2 / math.pi, rel=1e-14)


def test_j0_first_zero():
    assert abs(bessel_j_eval(0, J0_ZERO)) < 1e-10


def test_half_order_identity_on_interval():
    x = np.linspace(1e-3, 30, 3001)
    exact = np.sqrt(2 / (math.pi * x)) * np.sin(x)
    got = bessel_j(0.5, x)
    assert np.max(np.abs(got - exact) / np.maximum(np.abs(exact), 1e-300)) < 1e-10


@pytest.mark.parametrize("order", [0, 0.5, 1, 2.5, 3.5, 4, 7.5, 12])
def test_against_mpmath(order):
    xs = np.concatenate([np.linspace(0.01, 60, 400), [100, 250.5, 999.0]])
    got = bessel_j(order, xs)
    ref = np.array([_mp_j(order, x) for x in xs])
    # relative to the local modulus, since J has zeros
    scale = np.maximum(np.abs(ref), np.sqrt(2 / (math.pi * np.maximum(xs, 1.0))) * 1e-2)
    assert np.max(np.abs(got - ref) / scale) < 1e-10


@pytest.mark.parametrize("order", [0, 1.5, 3.5, 8])
def test_branches_agree_at_crossover(order):
    x0 = bessel_crossover(order)
    xs = np.linspace(x0 - 2, x0 + 2, 41)
    ref = np.array([_mp_j(order, x) for x in xs])
    assert np.max(np.abs(bessel_j(order, xs) - ref)) < 1e-12


@given(st.floats(1.0, 11.0), st.floats(0.1, 300.0))
def test_recurrence(lam, x):
    left = bessel_j(lam - 1, x) + bessel_j(lam + 1, x)
    right = 2 * lam / x * bessel_j(lam, x)
    scale = max(abs(left), abs(right), abs(bessel_j(lam, x)), 1e-3 * math.sqrt(2 / (math.pi * x)))
    assert abs(left - right) <= 1e-8 * scale


def test_scaled_is_continuous_at_zero():
    lam = 3.5
    at0 = bessel_j_scaled(lam, 0.0)
    assert at0 == pytest.approx(1 / (2**lam * math.gamma(lam + 1)), rel=1e-14)
    assert bessel_j_scaled(lam, 1e-6) == pytest.approx(at0, rel=1e-10)


def test_domain_errors():
    with pytest.raises(DomainError):
        bessel_j_eval(-1, 1.0)
    with pytest.raises(DomainError):
        bessel_j_eval(1, -1.0)
    with pytest.raises(ValueError):
        bessel_j(MAX_BESSEL_ORDER + 1, 1.0)


def test_modulus_bound_dominates():
    lam, x0 = 3.5, 20.0
    C = bessel_modulus_bound(lam, x0)
    xs = np.linspace(x0, 400, 5000)
    assert np.all(np.abs(bessel_j(lam, xs)) * np.sqrt(xs) <= C * (1 + 1e-12))


@pytest.mark.parametrize("x", [0.5, 1.0, 2.5, 4.75, 7.0, 12.5, 20.0, 29.5])
def test_gamma_against_math(x):
    assert gamma(x) == pytest.approx(math.gamma(x), rel=1e-13)
