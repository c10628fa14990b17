"""Voronovskaja limits, quantitative bounds and empirical rate fits.

All limit formulas are driven by a :class:`~durrmeyer.moments.MomentTable`.
Discrete moments that are not constant in ``u`` make the formal limit
ambiguous; in that case a :class:`PreconditionWarning` is emitted and, where
possible, a pointwise value is reported next to the formal one.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import ConfigError, IndeterminateRateError
from .functions import TestFunction
from .kernels import MultiIndex, as_kernel_nd
from .moments import MomentTable, discrete_algebraic_moment
from .operator import OperatorConfig, ScalingSequence, operator_eval_bounded, scaling_eval

__all__ = [
    "PreconditionWarning",
    "voronovskaja_coefficient",
    "ExpansionTerm",
    "expansion_terms",
    "second_order_terms",
    "precondition_violations",
    "LimitPrediction",
    "limit_prediction",
    "predicted_limit",
    "QuantConstants",
    "quantitative_constants",
    "BoundTerms",
    "bound_terms",
    "theoretical_bound",
    "kfunctional_bound",
    "kfunctional_upper_bound",
    "taylor_remainder",
    "remainder_bound",
    "ConvergenceReport",
    "convergence_report",
    "RateFit",
    "fit_rate",
    "empirical_rate",
]

# Moments below this are treated as vanishing.
VANISH_TOL = 1e-8


class PreconditionWarning(UserWarning):
    """A moment condition required by the limit formula does not hold."""


def _point(x, dim: int) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (dim,):
        raise ConfigError(f"point {x} does not have dimension {dim}")
    return x


def _deriv(f: TestFunction, h: MultiIndex, x: np.ndarray) -> float:
    if h.order > f.max_order:
        raise ConfigError(f"{f.name}: derivative of order {h.order} is not registered")
    return float(f.derivative(h, x))


# ---------------------------------------------------------------- limits


def voronovskaja_coefficient(h, moments: MomentTable, warn: bool = True) -> float:
    """``sum_{s <= h} binom(h, s) m_{h-s}(phi) mt_s(psi)`` with componentwise binomials."""
    h = MultiIndex(h)
    total = 0.0
    unstable = []
    for s in h.below():
        d = h.minus(s)
        if d.order and not moments.is_constant(d):
            unstable.append(d.label())
        total += h.binom(s) * moments.m(d) * moments.m_tilde(s)
    if unstable and warn:
        warnings.warn(f"discrete moments {', '.join(unstable)} are not constant; "
                      "their mean over the unit cell was used", PreconditionWarning, stacklevel=2)
    return total


@dataclass(frozen=True)
class ExpansionTerm:
    h: MultiIndex
    derivative: float
    coefficient: float
    factor: float  # a^h (limit form) or 1/p^h (finite n)
    value: float


def expansion_terms(f: TestFunction, x, scale, moments: MomentTable, r: int,
                    n: int | None = None, warn: bool = True) -> list[ExpansionTerm]:
    """Terms ``D^h f(x)/h! * coefficient(h) * factor`` for ``1 <= |h| <= r``.

    With ``n=None``, ``scale`` is the limit vector ``a`` and ``factor = a^h``,
    so a term of order ``nu`` is the coefficient of ``n^-nu``.  With ``n``
    given, ``scale`` is ``p(n)`` and ``factor = 1/p^h``.
    """
    x = _point(x, f.dim)
    scale = np.atleast_1d(np.asarray(scale, dtype=float))
    out = []
    for nu in range(1, r + 1):
        for h in MultiIndex.of_order(nu, f.dim):
            d = _deriv(f, h, x)
            c = voronovskaja_coefficient(h, moments, warn=warn)
            fac = float(h.power(scale)) if n is None else 1.0 / float(h.power(scale))
            out.append(ExpansionTerm(h, d, c, fac, d / h.factorial * c * fac))
    return out


def second_order_terms(f: TestFunction, x, a, moments: MomentTable) -> dict:
    """Second-order limit terms written out coordinatewise.

    Diagonal entries ``a_k^2/2 f_kk (m_2ek + 2 m_ek mt_ek + mt_2ek)`` and one
    entry per unordered pair ``i < j``.  Keyed by multi-index so it can be
    compared with :func:`expansion_terms` term by term.
    """
    x = _point(x, f.dim)
    a = np.atleast_1d(np.asarray(a, dtype=float))
    N = f.dim
    m, mt = moments.m, moments.m_tilde
    e = [MultiIndex.unit(i, N) for i in range(N)]
    out = {}
    for k in range(N):
        h = MultiIndex.unit(k, N, 2)
        c = m(h) + 2.0 * m(e[k]) * mt(e[k]) + mt(h)
        out[h] = a[k] ** 2 / 2.0 * _deriv(f, h, x) * c
    for i, j in itertools.combinations(range(N), 2):
        h = e[i].plus(e[j])
        c = m(h) + m(e[j]) * mt(e[i]) + m(e[i]) * mt(e[j]) + mt(h)
        out[h] = a[i] * a[j] * _deriv(f, h, x) * c
    return out


def precondition_violations(moments: MomentTable, r: int, tol: float = VANISH_TOL) -> list[str]:
    """Reasons the order-``r`` limit formula does not apply, empty if it does."""
    issues = []
    for nu in range(1, r + 1):
        for h in MultiIndex.of_order(nu, moments.dim):
            if not moments.is_constant(h):
                e = moments._entry(h)
                issues.append(f"m_{h.label()}(phi) not constant in u (max deviation {e.m_maxdev:.6g}, "
                              f"mean {e.m_mean:.6g})")
            if nu < r:
                if abs(moments.m(h)) > tol:
                    issues.append(f"m_{h.label()}(phi) = {moments.m(h):.6g} does not vanish")
                if abs(moments.m_tilde(h)) > tol:
                    issues.append(f"mt_{h.label()}(psi) = {moments.m_tilde(h):.6g} does not vanish")
    if r > 1:
        top = MultiIndex.of_order(r, moments.dim)
        if all(abs(moments.m(h)) <= tol and abs(moments.m_tilde(h)) <= tol for h in top):
            issues.append(f"all moments of order {r} vanish")
    return issues


@dataclass
class LimitPrediction:
    """Formal limit, plus a pointwise variant when discrete moments vary with ``u``."""

    formal: float
    pointwise: Optional[float] = None
    cell_offset: Optional[tuple] = None  # frac(p(n) x) used for the pointwise value
    violations: list = field(default_factory=list)

    @property
    def preconditions_hold(self) -> bool:
        return not self.violations

    def describe(self) -> str:
        lines = [f"formal limit (mean discrete moments): {self.formal:.12g}"]
        if self.pointwise is not None:
            lines.append(f"pointwise limit at cell offset {self.cell_offset}: {self.pointwise:.12g}")
        lines += [f"precondition: {v}" for v in self.violations]
        return "\n".join(lines)


def _cell_offset(seq: ScalingSequence, x: np.ndarray, probe=(1, 2, 3, 5, 8, 13, 64, 255, 1024)):
    """``frac(p(n) x)`` if it is the same for every probed ``n``, else ``None``."""
    offs = []
    for n in probe:
        u = scaling_eval(seq, n) * x
        offs.append(u - np.floor(u))
    first = offs[0]
    if all(np.allclose(o, first, rtol=0, atol=1e-12) for o in offs):
        return first
    return None


def limit_prediction(f: TestFunction, x, a, moments: MomentTable, r: int,
                     phi=None, seq: ScalingSequence | None = None) -> LimitPrediction:
    """Limit of ``n^r (S f(x) - f(x))`` predicted from the moment table.

    For ``r = 1`` this is the first-order sum; for ``r > 1`` the order-``r``
    terms alone, which requires lower moments to vanish.  Any failed
    condition is listed and warned about.  When a needed discrete moment is
    not constant and ``phi`` and ``seq`` are given, the pointwise value uses
    ``m_h(phi, frac(p(n) x))`` instead of the mean, provided that offset does
    not depend on ``n``.
    """
    x = _point(x, f.dim)
    violations = precondition_violations(moments, r)
    if violations:
        warnings.warn("; ".join(violations), PreconditionWarning, stacklevel=2)
    terms = [t for t in expansion_terms(f, x, a, moments, r, warn=False) if t.h.order == r]
    formal = math.fsum(t.value for t in terms)
    pred = LimitPrediction(formal, violations=violations)
    unstable = [h for nu in range(1, r + 1) for h in MultiIndex.of_order(nu, f.dim)
                if not moments.is_constant(h)]
    if unstable and phi is not None and seq is not None:
        off = _cell_offset(seq, x)
        if off is not None:
            phi = as_kernel_nd(phi)
            local = {h: discrete_algebraic_moment(phi, h, off) for h in unstable}
            a = np.atleast_1d(np.asarray(a, dtype=float))
            total = []
            for t in terms:
                c = 0.0
                for s in t.h.below():
                    d = t.h.minus(s)
                    md = local.get(d, moments.m(d))
                    c += t.h.binom(s) * md * moments.m_tilde(s)
                total.append(t.derivative / t.h.factorial * c * float(t.h.power(a)))
            pred.pointwise = math.fsum(total)
            pred.cell_offset = tuple(float(v) for v in off)
    return pred


def predicted_limit(f: TestFunction, x, a, moments: MomentTable, r: int) -> float:
    """Formal Voronovskaja limit; see :func:`limit_prediction` for the pointwise variant."""
    return limit_prediction(f, x, a, moments, r).formal


# ---------------------------------------------------------------- constants and bounds


@dataclass(frozen=True)
class QuantConstants:
    r: int
    A: float
    B: float


def quantitative_constants(moments: MomentTable, r: int) -> QuantConstants:
    """``A_r = sum_mu binom(r, mu) M_mu Mt_{r-mu}`` and the analogue ``B_r`` at ``r + 1``."""
    M, Mt = moments.M_order, moments.M_tilde_order
    need = range(r + 2)
    missing = [nu for nu in need if nu not in M or nu not in Mt or math.isnan(M[nu]) or math.isnan(Mt[nu])]
    if missing:
        raise ConfigError(f"absolute moments of orders {missing} are missing from the table")
    A = sum(math.comb(r, mu) * M[mu] * Mt[r - mu] for mu in range(r + 1))
    B = sum(math.comb(r + 1, mu) * M[mu] * Mt[r + 1 - mu] for mu in range(r + 2))
    return QuantConstants(r, A, B)


def _norms_of_order(f: TestFunction, order: int, dim: int) -> dict:
    """``sup |D^h f|`` for every ``|h| = order``; missing norms raise ``ConfigError``."""
    out = {}
    for h in MultiIndex.of_order(order, dim):
        s = f.sup_norm(h)
        if s is None:
            raise ConfigError(f"{f.name}: no sup-norm bound for {h.label()}")
        out[h] = float(s)
    return out


def _index_tuples(dim: int, length: int):
    """All ``(i_1, ..., i_length)`` as multi-indices of order ``length``."""
    for idx in itertools.product(range(dim), repeat=length):
        h = [0] * dim
        for i in idx:
            h[i] += 1
        yield idx, MultiIndex(h)


@dataclass(frozen=True)
class BoundTerms:
    drift: float
    remainder: float

    @property
    def total(self) -> float:
        return self.drift + self.remainder


def bound_terms(f: TestFunction, x, seq: ScalingSequence, n: int, moments: MomentTable,
                consts: QuantConstants, r: int) -> BoundTerms:
    """Both terms of the direct estimate for ``|n^r (S f - f) - limit|``.

    ``drift = sum |D^h f(x)/h!| |n^r/p^h - a^h| |coefficient(h)|`` over
    ``|h| = r``; the remainder term is the derivative-norm bound of order
    ``r + 1`` with ``|p|`` the Euclidean norm of ``p(n)``.
    """
    x = _point(x, f.dim)
    if consts.r != r:
        raise ConfigError(f"constants are for order {consts.r}, not {r}")
    N = f.dim
    p = scaling_eval(seq, n)
    a = np.asarray(seq.a, dtype=float)
    ratio = n / p
    drift = 0.0
    for h in MultiIndex.of_order(r, N):
        # (n/p)^h equals n^r/p^h and is bitwise a^h whenever n/p == a
        gap = abs(float(h.power(ratio)) - float(h.power(a)))
        if gap == 0.0:
            continue
        c = voronovskaja_coefficient(h, moments, warn=False)
        drift += abs(_deriv(f, h, x) / h.factorial) * gap * abs(c)
    norms = _norms_of_order(f, r + 1, N)
    total = 0.0
    for idx, hr in _index_tuples(N, r):
        total += max(norms[hr.plus(MultiIndex.unit(j, N))] for j in range(N))
    pn = float(np.linalg.norm(p))
    rem = N ** (r + 2) * n**r * consts.B / (math.factorial(r + 1) * pn ** (r + 1)) * total
    return BoundTerms(drift, rem)


def theoretical_bound(f: TestFunction, x, seq: ScalingSequence, n: int, moments: MomentTable,
                      consts: QuantConstants, r: int) -> float:
    """Right-hand side of the direct estimate; always ``>= 0``."""
    return bound_terms(f, x, seq, n, moments, consts, r).total


def kfunctional_upper_bound(eps: float, f: TestFunction, derivative_selector=None) -> float:
    """Upper bound on ``K(eps, D^h f)`` from the gauges ``g = D^h f`` and ``g = 0``.

    ``derivative_selector`` is the multi-index ``h`` (``None`` for ``f`` itself).
    """
    if eps < 0:
        raise ConfigError("eps must be nonnegative")
    h = MultiIndex.zero(f.dim) if derivative_selector is None else MultiIndex(derivative_selector)
    if eps == 0:
        return 0.0
    grad = max(f.sup_norm(h.plus(MultiIndex.unit(i, f.dim))) for i in range(f.dim))
    return min(eps * grad, f.sup_norm(h))


def kfunctional_bound(f: TestFunction, x, seq: ScalingSequence, n: int, moments: MomentTable,
                      consts: QuantConstants, r: int) -> BoundTerms:
    """The K-functional form of the estimate with the gauge upper bound substituted."""
    x = _point(x, f.dim)
    N = f.dim
    p = scaling_eval(seq, n)
    pn = float(np.linalg.norm(p))
    drift = bound_terms(f, x, seq, n, moments, consts, r).drift
    A, B = consts.A, consts.B
    if r == 1:
        eps = B / A * N**2 / (4.0 * pn)
        ks = sum(kfunctional_upper_bound(eps, f, MultiIndex.unit(i, N)) for i in range(N))
        rem = 2.0 * N * n / pn * A * ks
    else:
        eps = N**2 * B / (2.0 * (r + 1) * pn * A)
        ks = sum(kfunctional_upper_bound(eps, f, hr) for _, hr in _index_tuples(N, r))
        rem = 2.0 / math.factorial(r) * n**r * N**r * A / pn**r * ks
    return BoundTerms(drift, rem)


def taylor_remainder(f: TestFunction, x, u, r: int) -> np.ndarray:
    """``f(u)`` minus its Taylor polynomial of order ``r`` about ``x``.

    ``x`` and ``u`` may be stacked along leading axes.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if f.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x, u = x[..., None], u[..., None]
    d = u - x
    out = f(u) - f(x)
    for nu in range(1, r + 1):
        for h in MultiIndex.of_order(nu, f.dim):
            out = out - f.derivative(h, x) * h.power(d) / h.factorial
    return out


def remainder_bound(f: TestFunction, x, u, r: int) -> np.ndarray:
    """Remainder estimate with the gauge bound in place of the K-functional.

    ``(2/r!) sum_{i_1..i_r} |u_i1 - x_i1|^r K(N |u_i1 - x_i1| / (2(r+1)), D_{i_1..i_r} f)``;
    the step is tied to the first index only.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if f.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x, u = x[..., None], u[..., None]
    N = f.dim
    d = np.abs(u - x)
    out = np.zeros(d.shape[:-1])
    for idx, hr in _index_tuples(N, r):
        di = d[..., idx[0]]
        eps = N * di / (2.0 * (r + 1))
        grad = max(f.sup_norm(hr.plus(MultiIndex.unit(j, N))) for j in range(N))
        k = np.minimum(eps * grad, f.sup_norm(hr))
        out = out + di**r * k
    return 2.0 / math.factorial(r) * out


# ---------------------------------------------------------------- convergence runs


@dataclass
class ConvergenceReport:
    """Per-``n`` values, errors and bounds at one point ``x``."""

    x: tuple
    r: int
    ns: list
    values: list
    errors: list
    bounds: list
    predicted: float
    pointwise: Optional[float] = None
    notes: list = field(default_factory=list)

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.ns, self.ns[1:])):
            raise ConfigError("n-grid must be strictly increasing")

    @property
    def scaled_errors(self) -> list:
        return [n**self.r * e for n, e in zip(self.ns, self.errors)]

    @property
    def residuals(self) -> list:
        return [abs(s - self.predicted) for s in self.scaled_errors]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for note in self.notes:
            buf.write(f"# {note}\n")
        w.writerow(["n", "value", "error", "scaled_error", "certified_bound", "predicted_limit", "residual"])
        for row in zip(self.ns, self.values, self.errors, self.scaled_errors, self.bounds,
                       [self.predicted] * len(self.ns), self.residuals):
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
        return buf.getvalue()


def convergence_report(f: TestFunction, phi, psi, seq: ScalingSequence, x, ns: Sequence[int],
                       r: int, moments: MomentTable, cfg: OperatorConfig | None = None,
                       mapper: Callable = map) -> ConvergenceReport:
    """Evaluate the operator over ``ns`` and attach the predicted limit.

    ``mapper`` is any ordered map (for example ``Executor.map``) used to run the
    independent evaluations; results are merged in grid order.
    """
    x = _point(x, f.dim)
    ns = [int(n) for n in ns]
    pred = limit_prediction(f, x, seq.a, moments, r, phi=phi, seq=seq)
    jobs = [(f, phi, psi, seq, n, x, cfg) for n in ns]
    results = list(mapper(_eval_job, jobs))
    fx = float(f(x))
    rep = ConvergenceReport(tuple(float(v) for v in x), r, ns,
                            [v.value for v in results], [v.value - fx for v in results],
                            [v.bound for v in results], pred.formal, pred.pointwise)
    if pred.pointwise is not None:
        rep.notes.append(f"formal limit {pred.formal!r} uses mean discrete moments; "
                         f"pointwise limit {pred.pointwise!r} at cell offset {pred.cell_offset}")
    rep.notes += [f"precondition: {v}" for v in pred.violations]
    return rep


def _eval_job(job):
    return operator_eval_bounded(*job)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    limit: float
    extrapolated: Optional[float] = None


def fit_rate(ns: Iterable[int], errors: Iterable[float], bounds: Iterable[float] | None = None,
             r: int = 1, extrapolate: bool = False) -> RateFit:
    """Least-squares slope of ``log |err|`` against ``log n``.

    The limit estimate is ``n^r err`` at the largest ``n``; with ``extrapolate``
    a Richardson step on the last two points removes a ``1/n`` correction.
    """
    ns = np.asarray(list(ns), dtype=float)
    err = np.asarray(list(errors), dtype=float)
    if len(ns) < 4:
        raise IndeterminateRateError(f"need at least 4 grid points, got {len(ns)}")
    if bounds is not None:
        b = np.asarray(list(bounds), dtype=float)
        bad = ~(b < np.abs(err))
        if np.any(bad):
            raise IndeterminateRateError(
                f"numerical bounds exceed the signal at n = {ns[bad].astype(int).tolist()}")
    if np.any(err == 0):
        raise IndeterminateRateError("zero error leaves the rate undefined")
    slope, intercept = np.polyfit(np.log(ns), np.log(np.abs(err)), 1)
    scaled = ns**r * err
    extra = None
    if extrapolate:
        n1, n2 = ns[-2], ns[-1]
        extra = float((n2 * scaled[-1] - n1 * scaled[-2]) / (n2 - n1))
    return RateFit(float(slope), float(intercept), float(scaled[-1]), extra)


def empirical_rate(report: ConvergenceReport, extrapolate: bool = False) -> RateFit:
    """Rate fit for a :class:`ConvergenceReport`."""
    return fit_rate(report.ns, report.errors, report.bounds, report.r, extrapolate)
