"""Discrete (lattice-sum) and continuous (integral) moments of kernels.

Discrete moments of ``phi`` are ``Z^N``-periodic functions of ``u``; they are
sampled on a uniform grid of the unit cell.  Continuous moments of ``psi``
use breakpoint-split composite Gauss-Legendre quadrature.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from . import quadrature
from .errors import ConfigError, DivergenceError, NumericError, UnsupportedError
from .kernels import BochnerRieszKernel, KernelND, MultiIndex, TensorKernel, as_kernel_nd
from .lattice import (
    check_summable,
    default_grid_density,
    lattice_sums,
    tail_bound,
    truncation_radius,
    unit_cell_grid,
)

__all__ = [
    "discrete_algebraic_moment",
    "ConstancyResult",
    "constancy_check",
    "continuous_algebraic_moment",
    "discrete_absolute_moment",
    "euclidean_absolute_moment",
    "continuous_absolute_moment",
    "FourierMomentCheck",
    "fourier_moment_check",
    "tail_decay_check",
    "MomentEntry",
    "MomentTable",
    "moment_table",
]

DEFAULT_TRUNCATION_TOL = 1e-3
DEFAULT_QUAD_TOL = 1e-13
# Largest tensor rule tried before giving up on a continuous moment.
MAX_RULE_NODES = 20_000_000


def _mi(h, dim: int) -> MultiIndex:
    h = MultiIndex([h] if np.isscalar(h) else h)
    if h.dim != dim:
        raise ValueError(f"multi-index {tuple(h)} does not match dimension {dim}")
    return h


def _radius(phi: KernelND, order: int, tol: float, radius: float | None) -> float | None:
    check_summable(phi, order)
    if phi.compact:
        return None
    if radius is not None:
        return radius
    return truncation_radius(phi, order, tol)[0]


def discrete_algebraic_moment(phi, h, u, truncation_tol: float = DEFAULT_TRUNCATION_TOL,
                              radius: float | None = None) -> float:
    """``sum_k phi(u - k) (k - u)^h``, truncated so the omitted absolute mass is below ``truncation_tol``."""
    phi = as_kernel_nd(phi)
    h = _mi(h, phi.dim)
    R = _radius(phi, h.order, truncation_tol, radius)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    return float(lattice_sums(phi, u[None, :], h.power, radius=R)[0])


@dataclass(frozen=True)
class ConstancyResult:
    mean: float
    max_deviation: float
    is_constant: bool
    minimum: float
    maximum: float
    tail_bound: float


def constancy_check(phi, h, grid_density: int | None = None, tol: float = 1e-10,
                    truncation_tol: float = DEFAULT_TRUNCATION_TOL,
                    radius: float | None = None) -> ConstancyResult:
    """Sample the discrete algebraic moment over the unit cell.

    ``max_deviation`` is ``max - min`` over the grid; the moment is reported
    constant when it does not exceed ``tol`` plus twice the certified tail
    bound.  ``mean`` is the exact cell average for tensor kernels and the
    grid average otherwise.
    """
    phi = as_kernel_nd(phi)
    h = _mi(h, phi.dim)
    R = _radius(phi, h.order, truncation_tol, radius)
    density = grid_density or default_grid_density(phi.dim, phi.compact)
    us = unit_cell_grid(phi.dim, density)
    vals = lattice_sums(phi, us, h.power, radius=R)
    lo, hi = float(vals.min()), float(vals.max())
    dev = hi - lo
    bound = 0.0 if R is None else tail_bound(phi, h.order, R)
    mean = _cell_mean(phi, h)
    if mean is None:
        mean = float(vals.mean())
    # truncation may shift each sample by up to the tail bound
    return ConstancyResult(mean, dev, dev <= tol + 2.0 * bound, lo, hi, bound)


def _cell_mean(phi: KernelND, h: MultiIndex) -> float | None:
    """Exact unit-cell average ``(-1)^|h| int phi(t) t^h dt`` for tensor kernels."""
    if not isinstance(phi, TensorKernel):
        return None
    try:
        return (-1) ** h.order * _continuous_moment(phi, h, DEFAULT_QUAD_TOL, absolute=False)
    except (NumericError, DivergenceError):
        return None


# --- continuous moments -----------------------------------------------------

def _tensor_rule(psi: TensorKernel, h: MultiIndex, tol: float, refine: int, absolute: bool):
    rules, masses, omitted = [], [], []
    for f, hi in zip(psi.factors, h):
        edges, om = f.quadrature_edges(tol, hi)
        if absolute or hi % 2:
            edges = np.unique(np.append(edges, 0.0)) if edges[0] < 0 < edges[-1] else edges
        x, w = quadrature.composite_rule(edges, refine=refine)
        rules.append((x, w))
        weight = np.abs(x) ** hi if absolute else x**hi
        masses.append(float(np.dot(w, np.abs(weight * f(x)))))
        omitted.append(om)
    bound = 0.0
    for i in range(len(rules)):
        if omitted[i]:
            bound += omitted[i] * math.prod(m for j, m in enumerate(masses) if j != i)
    return quadrature.tensor_rule(rules), bound


def _continuous_moment(psi, h, quad_tol: float, absolute: bool) -> float:
    psi = as_kernel_nd(psi)
    h = _mi(h, psi.dim)
    if not isinstance(psi, TensorKernel):
        raise UnsupportedError(f"continuous moments of {psi.identifier} are not supported")
    prev = None
    for refine in range(0, 7):
        # each axis gets a quarter of the budget for its dropped tail
        (nodes, weights), omitted = _tensor_rule(psi, h, quad_tol / (4 * psi.dim), refine, absolute)
        if len(weights) > MAX_RULE_NODES:
            break
        vals = psi(nodes)
        if absolute:
            vals = np.abs(vals) * MultiIndex(h).power(np.abs(nodes))
        else:
            vals = vals * h.power(nodes)
        cur = float(np.sum(weights * vals))
        if prev is not None and abs(cur - prev) + omitted <= quad_tol:
            return cur
        prev = cur
    raise NumericError(f"quadrature for moment {h.label()} of {psi.identifier} did not converge")


def continuous_algebraic_moment(psi, h, quad_tol: float = DEFAULT_QUAD_TOL) -> float:
    """``int t^h psi(t) dt``."""
    return _continuous_moment(psi, h, quad_tol, absolute=False)


def continuous_absolute_moment(psi, h, quad_tol: float = DEFAULT_QUAD_TOL) -> float:
    """``int [t]^h |psi(t)| dt``; an integer ``h`` is read as an order and maximised over ``|h| = h``."""
    psi = as_kernel_nd(psi)
    if np.isscalar(h):
        return max(_continuous_moment(psi, hh, quad_tol, True) for hh in MultiIndex.of_order(int(h), psi.dim))
    return _continuous_moment(psi, h, quad_tol, absolute=True)


# --- absolute discrete moments ----------------------------------------------

def _refine_sup(func, u0: np.ndarray, step: float, f0: float) -> float:
    """Golden-section refinement around a grid maximiser, one axis at a time."""
    best_u, best = u0.copy(), f0
    for axis in range(u0.size):
        def neg(t, axis=axis):
            u = best_u.copy()
            u[axis] = t
            return -func(u)

        res = minimize_scalar(neg, bounds=(best_u[axis] - step, best_u[axis] + step),
                              method="bounded", options={"xatol": 1e-10})
        if -res.fun > best:
            best = -res.fun
            best_u[axis] = res.x
    return best


def _abs_sup(phi: KernelND, weight, order: int, grid_density, truncation_tol, radius) -> float:
    R = _radius(phi, order, truncation_tol, radius)
    density = grid_density or default_grid_density(phi.dim, phi.compact)
    us = unit_cell_grid(phi.dim, density)
    vals = lattice_sums(phi, us, weight, radius=R, absolute=True)
    i = int(np.argmax(vals))

    def at(u):
        return float(lattice_sums(phi, u[None, :], weight, radius=R, absolute=True)[0])

    return _refine_sup(at, us[i].copy(), 1.0 / density, float(vals[i]))


def discrete_absolute_moment(phi, h, grid_density: int | None = None,
                             truncation_tol: float = DEFAULT_TRUNCATION_TOL,
                             radius: float | None = None) -> float:
    """``sup_u sum_k |phi(u - k)| [u - k]^h``.

    An integer ``h`` is read as an order ``nu`` and the maximum over all
    ``|h| = nu`` is returned.  Raises :class:`DivergenceError` when the sum is
    not absolutely convergent.
    """
    phi = as_kernel_nd(phi)
    if np.isscalar(h):
        hs = MultiIndex.of_order(int(h), phi.dim)
        return max(discrete_absolute_moment(phi, hh, grid_density, truncation_tol, radius) for hh in hs)
    h = _mi(h, phi.dim)

    def weight(d):
        return h.power(np.abs(d))

    return _abs_sup(phi, weight, h.order, grid_density, truncation_tol, radius)


def euclidean_absolute_moment(phi, nu: int, grid_density: int | None = None,
                              truncation_tol: float = DEFAULT_TRUNCATION_TOL,
                              radius: float | None = None) -> float:
    """``sup_u sum_k |phi(u - k)| |u - k|^nu`` (Euclidean norm)."""
    phi = as_kernel_nd(phi)

    def weight(d):
        return np.sqrt(np.sum(d * d, axis=-1)) ** nu

    return _abs_sup(phi, weight, nu, grid_density, truncation_tol, radius)


# --- Fourier criterion -------------------------------------------------------

@dataclass(frozen=True)
class FourierMomentCheck:
    c: complex
    moment: float
    passes: bool
    offenders: list = field(default_factory=list)  # [(k tuple, value)]
    value_at_zero: float = 0.0


def fourier_moment_check(phi, h, k_range: int = 3, tol: float = 1e-12) -> FourierMomentCheck:
    """Check that ``D^h hat phi`` vanishes at ``2 pi k`` for ``0 < |k|_inf <= k_range``.

    ``c`` is read from ``D^h hat phi(0) = (-i)^|h| c`` and the implied constant
    moment is ``(-1)^|h| c``.
    """
    phi = as_kernel_nd(phi)
    h = _mi(h, phi.dim)
    if not phi.has_fourier:
        raise UnsupportedError(f"{phi.identifier} has no closed-form Fourier transform")
    axis = np.arange(-k_range, k_range + 1)
    grid = np.meshgrid(*([axis] * phi.dim), indexing="ij")
    ks = np.stack([g.ravel() for g in grid], axis=-1)
    ks = ks[np.any(ks != 0, axis=1)]
    vals = phi.fourier(2.0 * math.pi * ks, h)
    offenders = [(tuple(int(c) for c in k), float(v)) for k, v in zip(ks, vals) if abs(v) > tol]
    d0 = float(phi.fourier(np.zeros(phi.dim), h))
    c = d0 / (-1j) ** h.order
    moment = ((-1) ** h.order * c)
    moment_real = float(moment.real) if abs(moment.imag) <= 1e-14 else float("nan")
    return FourierMomentCheck(c, moment_real, not offenders, offenders, d0)


# --- tails ---------------------------------------------------------------------

def tail_decay_check(phi, r: int, w_grid, u_grid_density: int | None = None,
                     far_factor: float = 4.0) -> list[dict]:
    """Uniform tails ``sup_u sum_{|u-k|>w} |phi(u-k)| |u-k|^r`` for each ``w``.

    The sum is computed explicitly out to ``far_factor * w`` and the
    certified envelope bound is added for the remainder, so each value is an
    upper estimate of the true tail.
    """
    phi = as_kernel_nd(phi)
    check_summable(phi, r)
    density = u_grid_density or default_grid_density(phi.dim, phi.compact)
    us = unit_cell_grid(phi.dim, density)

    def weight(d):
        return np.sqrt(np.sum(d * d, axis=-1)) ** r

    out = []
    for w in w_grid:
        w = float(w)
        if phi.compact:
            far, rest = None, 0.0
        else:
            _, x0 = phi.envelope()
            far = max(far_factor * w, x0 + 2 * math.sqrt(phi.dim) + 1.0)
            rest = tail_bound(phi, r, far)
        vals = lattice_sums(phi, us, weight, radius=far, inner=w, absolute=True)
        out.append({"w": w, "sup_tail": float(vals.max()) + rest, "explicit": float(vals.max()), "bound": rest})
    return out


# --- moment table ----------------------------------------------------------------

@dataclass
class MomentEntry:
    h: MultiIndex
    m_mean: float
    m_maxdev: float
    m_tilde: float
    M: float
    M_tilde: float
    constant: bool


@dataclass
class MomentTable:
    """Moments of a kernel pair indexed by multi-index, plus per-order maxima."""

    phi_id: str
    psi_id: str
    dim: int
    entries: dict = field(default_factory=dict)  # MultiIndex -> MomentEntry
    M_order: dict = field(default_factory=dict)  # nu -> M_nu(phi)
    M_tilde_order: dict = field(default_factory=dict)  # nu -> tilde M_nu(psi)
    algebraic_order: int = 0

    def m(self, h) -> float:
        h = MultiIndex(h)
        if h.order == 0:
            return 1.0
        return self._entry(h).m_mean

    def m_tilde(self, h) -> float:
        h = MultiIndex(h)
        if h.order == 0:
            return 1.0
        return self._entry(h).m_tilde

    def is_constant(self, h) -> bool:
        h = MultiIndex(h)
        return h.order == 0 or self._entry(h).constant

    def _entry(self, h: MultiIndex) -> MomentEntry:
        if h.order > self.algebraic_order:
            raise ConfigError(f"algebraic moments of order {h.order} were not computed "
                              f"(table stops at {self.algebraic_order})")
        try:
            return self.entries[h]
        except KeyError:
            raise ConfigError(f"moment table has no entry for {h.label()}") from None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["h", "m_mean", "m_maxdev", "m_tilde", "M", "M_tilde", "constant"])
        for h in sorted(self.entries, key=lambda k: (k.order, tuple(-c for c in k))):
            e = self.entries[h]
            w.writerow([h.label(), _fmt(e.m_mean), _fmt(e.m_maxdev), _fmt(e.m_tilde),
                        _fmt(e.M), _fmt(e.M_tilde), str(e.constant).lower()])
        return buf.getvalue()


def _fmt(x: float) -> str:
    return repr(float(x))


def _summable(phi: KernelND, order: int) -> bool:
    try:
        check_summable(phi, order)
        return True
    except DivergenceError:
        return False


def moment_table(phi, psi, order: int, absolute_order: Optional[int] = None,
                 grid_density: int | None = None, constancy_tol: float = 1e-8,
                 truncation_tol: float = DEFAULT_TRUNCATION_TOL,
                 quad_tol: float = DEFAULT_QUAD_TOL) -> MomentTable:
    """Algebraic moments up to ``order`` and absolute moments up to ``absolute_order``.

    Divergent discrete sums are stored as ``nan`` (algebraic) or ``inf``
    (absolute) rather than raised, so the table can still be inspected.
    """
    phi = as_kernel_nd(phi)
    psi = as_kernel_nd(psi)
    if phi.dim != psi.dim:
        raise ValueError("phi and psi must have the same dimension")
    absolute_order = order if absolute_order is None else absolute_order
    table = MomentTable(phi.identifier, psi.identifier, phi.dim, algebraic_order=order)
    top = max(order, absolute_order)
    shared = None
    if not phi.compact:
        # one radius for all algebraic orders, set by the highest summable one
        for nu in range(order, 0, -1):
            try:
                shared = truncation_radius(phi, nu, truncation_tol)[0]
                break
            except DivergenceError:
                continue
    for nu in range(0, top + 1):
        Ms, Mts = [], []
        for h in MultiIndex.of_order(nu, phi.dim):
            if nu <= order:
                try:
                    cc = constancy_check(phi, h, grid_density, constancy_tol, truncation_tol,
                                        radius=shared if shared and _summable(phi, nu) else None)
                    mean, dev, const = cc.mean, cc.max_deviation, cc.is_constant
                except DivergenceError:
                    mean, dev, const = math.nan, math.nan, False
                try:
                    mt = continuous_algebraic_moment(psi, h, quad_tol)
                except (DivergenceError, UnsupportedError):
                    mt = math.nan
            else:
                mean = dev = mt = math.nan
                const = False
            if nu <= absolute_order:
                try:
                    M = discrete_absolute_moment(phi, h, grid_density, truncation_tol)
                except DivergenceError:
                    M = math.inf
                try:
                    Mt = continuous_absolute_moment(psi, h, quad_tol)
                except (DivergenceError, UnsupportedError):
                    Mt = math.inf
            else:
                M = Mt = math.nan
            table.entries[h] = MomentEntry(h, mean, dev, mt, M, Mt, const)
            Ms.append(M)
            Mts.append(Mt)
        if nu <= absolute_order:
            table.M_order[nu] = max(Ms)
            table.M_tilde_order[nu] = max(Mts)
    return table
