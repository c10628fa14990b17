import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from durrmeyer.asymptotics import (
    ConvergenceReport,
    PreconditionWarning,
    bound_terms,
    convergence_report,
    empirical_rate,
    expansion_terms,
    fit_rate,
    kfunctional_bound,
    kfunctional_upper_bound,
    limit_prediction,
    precondition_violations,
    predicted_limit,
    quantitative_constants,
    remainder_bound,
    second_order_terms,
    taylor_remainder,
    theoretical_bound,
    voronovskaja_coefficient,
)
from durrmeyer.errors import ConfigError, IndeterminateRateError
from durrmeyer.functions import Constant, Gaussian, Polynomial, TrigProduct, make_function
from durrmeyer.kernels import MultiIndex, bspline2_eval, make_kernel
from durrmeyer.moments import moment_table
from durrmeyer.operator import linear_scaling, make_scaling


@pytest.fixture(scope="module")
def t_b2b2():
    b2 = make_kernel("bspline2")
    return moment_table(b2, b2, 2, absolute_order=3)


@pytest.fixture(scope="module")
def t_b2f():
    return moment_table(make_kernel("bspline2"), make_kernel("f-kernel"), 1, absolute_order=2)


@pytest.fixture(scope="module")
def t_br3():
    return moment_table(make_kernel("bochner-riesz:gamma=3", 1), make_kernel("bspline2"), 2)


@pytest.fixture(scope="module")
def t_2d():
    return moment_table(make_kernel("tensor:bspline2^2"), make_kernel("tensor:f-kernel^2"), 2, absolute_order=3)


# ---------------------------------------------------------------- coefficients and limits


def test_coefficient_first_order(t_b2f):
    assert abs(voronovskaja_coefficient((1,), t_b2f) - 1 / 3) < 1e-12


def test_coefficient_second_order(t_br3):
    assert abs(voronovskaja_coefficient((2,), t_br3) - (6 + 1 / 6)) < 1e-3


def test_coefficient_mixed_vanishes():
    b = make_kernel("tensor:bspline2^2")
    table = moment_table(b, b, 2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PreconditionWarning)
        assert abs(voronovskaja_coefficient((1, 1), table)) < 1e-15


def test_coefficient_warns_on_nonconstant(t_b2b2):
    with pytest.warns(PreconditionWarning):
        voronovskaja_coefficient((2,), t_b2b2)


def test_coefficient_missing_entry(t_b2f):
    with pytest.raises(ConfigError):
        voronovskaja_coefficient((2,), t_b2f)


def test_first_order_terms_vanish_at_critical_point(t_b2f):
    terms = expansion_terms(Gaussian(1), [0.0], [1.0], t_b2f, 1)
    assert all(t.value == 0.0 for t in terms)


def test_second_order_unit_coefficient(t_b2b2):
    f = Polynomial({(2,): 1.0}, 1)
    terms = expansion_terms(f, [0.3], [1.0], t_b2b2, 2, warn=False)
    (t2,) = [t for t in terms if t.h.order == 2]
    assert t2.value == pytest.approx(2.0 / 2 * t2.coefficient, rel=1e-15)


def test_finite_n_factor(t_b2f):
    seq = linear_scaling([2.0])
    terms = expansion_terms(Gaussian(1), [0.5], seq(10), t_b2f, 1, n=10)
    assert terms[0].factor == 1 / 20


def test_first_order_limit_gauss(t_b2f):
    f = Gaussian(1)
    for x in (0.5, -0.8):
        expected = 1 / 3 * float(f.derivative((1,), [x]))
        assert abs(predicted_limit(f, [x], (1.0,), t_b2f, 1) - expected) < 1e-12


def test_second_order_limit_sine(t_br3):
    f = TrigProduct(["sin"])
    x = 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", PreconditionWarning)
        pred = limit_prediction(f, [x], (1.0,), t_br3, 2)
    assert pred.preconditions_hold
    expected = (3 + 1 / 12) * -math.sin(x)
    assert abs(pred.formal - expected) < 1e-3


@pytest.mark.parametrize("r", [1, 2])
def test_constant_has_zero_limit(t_b2b2, r):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PreconditionWarning)
        assert predicted_limit(Constant(4.0, 1), [0.2], (1.0,), t_b2b2, r) == 0.0


def test_nonconstant_moment_formal_and_pointwise(t_b2b2):
    f = Polynomial({(2,): 1.0}, 1)
    with pytest.warns(PreconditionWarning):
        pred = limit_prediction(f, [0.0], (1.0,), t_b2b2, 2, phi=make_kernel("bspline2"),
                                seq=linear_scaling([1.0]))
    assert abs(pred.formal - 1 / 3) < 1e-12
    assert abs(pred.pointwise - 1 / 6) < 1e-12
    assert pred.cell_offset == (0.0,)
    assert any("not constant" in v for v in pred.violations)


def test_pointwise_absent_when_offset_moves(t_b2b2):
    f = Polynomial({(2,): 1.0}, 1)
    with pytest.warns(PreconditionWarning):
        pred = limit_prediction(f, [0.3], (1.0,), t_b2b2, 2, phi=make_kernel("bspline2"),
                                seq=linear_scaling([1.0]))
    assert pred.pointwise is None


def test_preconditions(t_b2f, t_br3, t_b2b2):
    assert precondition_violations(t_b2f, 1) == []
    assert precondition_violations(t_br3, 2) == []
    issues = precondition_violations(t_b2b2, 2)
    assert len(issues) == 1 and "(2)" in issues[0]


def test_two_paths_for_second_order(t_2d, rng):
    f = Gaussian(2)
    for _ in range(10):
        x = rng.uniform(-1, 1, size=2)
        a = rng.uniform(0.2, 2, size=2)
        terms = {t.h: t.value for t in expansion_terms(f, x, a, t_2d, 2, warn=False) if t.h.order == 2}
        expanded = second_order_terms(f, x, a, t_2d)
        assert terms.keys() == expanded.keys()
        for h in terms:
            assert abs(terms[h] - expanded[h]) <= 1e-14 * max(1.0, abs(terms[h]))


def test_vanishing_orders_give_small_terms(t_br3, rng):
    f = TrigProduct(["cos"])
    for x in rng.uniform(-3, 3, size=10):
        first = [t for t in expansion_terms(f, [x], [1.0], t_br3, 2) if t.h.order == 1]
        assert all(abs(t.value) < 1e-12 for t in first)


# ---------------------------------------------------------------- constants and bounds


def _grid_sup(weight, density=4096):
    u = np.arange(density) / density
    ks = np.arange(-2, 3)
    d = u[:, None] - ks[None, :]
    return float(np.max(np.sum(np.abs(bspline2_eval(d)) * weight(np.abs(d)), axis=1)))


def test_constants_from_raw_moments(t_b2b2):
    # discrete maxima by a direct grid sweep, continuous moments by adaptive quadrature
    M = [_grid_sup(lambda d, nu=nu: d**nu) for nu in range(3)]
    Mt = [sum(integrate.quad(lambda t, nu=nu: abs(t) ** nu * bspline2_eval(t), a, b, epsabs=1e-15)[0]
              for a, b in ((-1, 0), (0, 1))) for nu in range(3)]
    A = M[0] * Mt[1] + M[1] * Mt[0]
    B = M[0] * Mt[2] + 2 * M[1] * Mt[1] + M[2] * Mt[0]
    c = quantitative_constants(t_b2b2, 1)
    assert abs(c.A - A) < 1e-12 and abs(c.B - B) < 1e-12
    assert abs(c.A - 5 / 6) < 1e-12 and abs(c.B - 3 / 4) < 1e-12


def test_constants_need_orders(t_b2f):
    with pytest.raises(ConfigError):
        quantitative_constants(t_b2f, 2)


def test_constants_general_formula_matches_first_order(t_2d):
    c = quantitative_constants(t_2d, 1)
    M, Mt = t_2d.M_order, t_2d.M_tilde_order
    assert c.A == pytest.approx(M[0] * Mt[1] + M[1] * Mt[0], rel=1e-15)
    assert c.A > 0 and c.B > 0


def test_bound_example(t_b2b2):
    seq = linear_scaling([1.0])
    c = quantitative_constants(t_b2b2, 1)
    terms = bound_terms(TrigProduct(["sin"]), [0.4], seq, 10, t_b2b2, c, 1)
    assert terms.drift == 0.0
    assert abs(terms.remainder - 0.0375) < 1e-15


@given(st.sampled_from([1.0, 2.0, 3.0, 0.5, 1.5, 4.0, 7.0]), st.sampled_from([1.0, 2.0, 3.0, 0.25]),
       st.integers(1, 10_000), st.sampled_from([1, 2]))
def test_zero_drift_for_exact_law(c1, c2, n, r):
    table = _TABLE_2D[0]
    seq = linear_scaling([c1, c2])
    assert seq.is_exact(n)
    consts = quantitative_constants(table, r)
    terms = bound_terms(Gaussian(2), [0.3, -0.2], seq, n, table, consts, r)
    assert terms.drift == 0.0
    assert terms.total >= 0.0


_TABLE_2D = []


@pytest.fixture(autouse=True, scope="module")
def _share_2d(t_2d):
    _TABLE_2D[:] = [t_2d]


def test_drift_positive_for_shifted_law(t_b2f):
    seq = make_scaling("n+sqrt", 1)
    c = quantitative_constants(t_b2f, 1)
    assert bound_terms(Gaussian(1), [0.5], seq, 64, t_b2f, c, 1).drift > 0


def test_kfunctional_form_matches_direct_form(t_b2f):
    seq = linear_scaling([1.0])
    c = quantitative_constants(t_b2f, 1)
    for n in (8, 64, 256):
        direct = theoretical_bound(Gaussian(1), [0.5], seq, n, t_b2f, c, 1)
        kform = kfunctional_bound(Gaussian(1), [0.5], seq, n, t_b2f, c, 1).total
        assert kform <= direct * (1 + 1e-12)


def test_kfunctional_examples():
    f = Gaussian(2)
    assert kfunctional_upper_bound(0.0, f) == 0.0
    for eps in (1e-3, 0.1, 1.0, 10.0):
        assert kfunctional_upper_bound(eps, f) <= eps * max(f.sup_norm((1, 0)), f.sup_norm((0, 1)))
    with pytest.raises(ConfigError):
        kfunctional_upper_bound(-1.0, f)


@given(st.floats(0, 50), st.floats(0, 50), st.sampled_from(["gauss", "sin", "cos"]),
       st.sampled_from([None, (1,), (2,)]))
def test_kfunctional_monotone(e1, e2, fid, sel):
    f = make_function(fid, 1)
    lo, hi = sorted((e1, e2))
    assert kfunctional_upper_bound(lo, f, sel) <= kfunctional_upper_bound(hi, f, sel)


# ---------------------------------------------------------------- remainders


def test_taylor_exact_for_polynomials(rng):
    f = Polynomial({(2, 1): 1.5, (1, 0): -2.0, (0, 0): 0.3}, 2)
    x = rng.uniform(-2, 2, size=(50, 2))
    u = rng.uniform(-2, 2, size=(50, 2))
    assert np.max(np.abs(taylor_remainder(f, x, u, 3))) < 1e-12


@pytest.mark.parametrize("h", [0.5, -1.25, 3.0])
def test_taylor_square(h):
    f = Polynomial({(2,): 1.0}, 1)
    assert taylor_remainder(f, 0.0, h, 1) == pytest.approx(h * h, rel=1e-15)


@pytest.mark.parametrize("fid", ["gauss", "sin", "cos", "monomial:3", "const:2"])
@pytest.mark.parametrize("r", [1, 2])
def test_remainder_estimate_1d(fid, r, rng):
    f = make_function(fid, 1)
    x = rng.uniform(-3, 3, size=1000)
    u = x + rng.uniform(-2, 2, size=1000) * rng.choice([1e-3, 0.1, 1.0], size=1000)
    lhs = np.abs(taylor_remainder(f, x, u, r))
    assert np.all(lhs <= remainder_bound(f, x, u, r) + 1e-13)


@pytest.mark.parametrize("fid", ["gauss", "sin", "cos", "trig:sin,cos", "monomial:1,2"])
@pytest.mark.parametrize("r", [1, 2])
def test_remainder_estimate_2d(fid, r, rng):
    f = make_function(fid, 2)
    x = rng.uniform(-2, 2, size=(1000, 2))
    u = x + rng.uniform(-1, 1, size=(1000, 2))
    lhs = np.abs(taylor_remainder(f, x, u, r))
    assert np.all(lhs <= remainder_bound(f, x, u, r) + 1e-13)


# ---------------------------------------------------------------- rates


@pytest.mark.parametrize("r", [1, 2])
def test_rate_exact_power_law(r):
    ns = [8, 16, 32, 64, 128, 256]
    fit = fit_rate(ns, [0.7 * n**-r for n in ns], r=r)
    assert abs(fit.slope + r) < 0.01
    assert fit.limit == pytest.approx(0.7, rel=1e-12)


def test_rate_perturbed_power_law():
    ns = [8, 16, 32, 64, 128, 256]
    fit = fit_rate(ns, [1.3 / n * (1 + 0.1 / n) for n in ns], r=1, extrapolate=True)
    assert abs(fit.slope + 1) < 0.05
    assert abs(fit.extrapolated - 1.3) < 1e-6


def test_rate_indeterminate():
    ns = [8, 16, 32, 64]
    errs = [1e-3, 5e-4, 2.5e-4, 1.25e-4]
    with pytest.raises(IndeterminateRateError):
        fit_rate(ns[:3], errs[:3])
    with pytest.raises(IndeterminateRateError):
        fit_rate(ns, errs, bounds=[1e-12, 1e-12, 1e-12, 1e-3])
    with pytest.raises(IndeterminateRateError):
        fit_rate(ns, [1e-3, 0.0, 1e-4, 1e-5])


def test_report_rejects_unsorted_grid():
    with pytest.raises(ConfigError):
        ConvergenceReport((0.0,), 1, [8, 8, 16], [0] * 3, [0] * 3, [0] * 3, 0.0)


def test_convergence_report_first_order(t_b2f):
    f = Gaussian(1)
    ns = [16, 32, 64, 128]
    rep = convergence_report(f, make_kernel("bspline2"), make_kernel("f-kernel"), linear_scaling([1.0]),
                             [0.5], ns, 1, t_b2f)
    assert len(rep.residuals) == len(ns)
    fit = empirical_rate(rep)
    assert abs(fit.slope + 1) < 0.1
    assert abs(fit.limit - rep.predicted) < 0.05 * abs(rep.predicted)
    text = rep.to_csv()
    assert text.splitlines()[0] == "n,value,error,scaled_error,certified_bound,predicted_limit,residual"
