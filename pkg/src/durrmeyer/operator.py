"""Evaluation of the Durrmeyer sampling series at points.

The series is

    S f(x) = sum_k phi(p x - k) * int psi(t) f((t + k) / p) dt,

with the inner integral taken in ``t``-space so its domain is the fixed
support of ``psi``.  Every value carries a certified error bound that adds
the omitted lattice tail, the quadrature refinement gap and the mass of
``psi`` dropped by domain truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import quadrature
from .errors import ConfigError, NumericError, UnsupportedError
from .functions import TestFunction
from .kernels import KernelND, MultiIndex, TensorKernel, as_kernel_nd
from .lattice import Window, check_summable, truncation_radius, window

__all__ = [
    "ScalingSequence",
    "linear_scaling",
    "sqrt_shift_scaling",
    "make_scaling",
    "scaling_eval",
    "OperatorConfig",
    "OperatorValue",
    "inner_profile",
    "lattice_truncation",
    "operator_eval",
    "operator_eval_bounded",
    "evaluate_points",
]


# Largest (lattice points x quadrature nodes) product tried for the inner integrals.
MAX_QUAD_POINTS = 30_000_000

# ---------------------------------------------------------------- scalings


class _Linear:
    def __init__(self, factors):
        self.factors = np.asarray(factors, dtype=float)

    def __call__(self, n):
        return self.factors * n


class _SqrtShift:
    def __init__(self, dim):
        self.dim = dim

    def __call__(self, n):
        return np.full(self.dim, n + math.sqrt(n))


@dataclass(frozen=True)
class ScalingSequence:
    """A law ``n -> p(n)`` in ``R^N_+`` together with its limit ``a = lim n / p(n)``."""

    law: Callable[[int], np.ndarray]
    a: tuple
    name: str = "custom"

    @property
    def dim(self) -> int:
        return len(self.a)

    def __call__(self, n: int) -> np.ndarray:
        return scaling_eval(self, n)

    def ratio(self, n: int) -> np.ndarray:
        """Measured ``n / p(n)``."""
        return n / scaling_eval(self, n)

    def is_exact(self, n: int) -> bool:
        """Whether ``n / p(n)`` equals ``a`` to the last bit."""
        return bool(np.all(self.ratio(n) == np.asarray(self.a)))


def linear_scaling(factors: Sequence[float]) -> ScalingSequence:
    """``p_i(n) = c_i n``, so ``a_i = 1 / c_i``."""
    factors = tuple(float(c) for c in factors)
    if any(c <= 0 for c in factors):
        raise ConfigError(f"scaling factors must be positive: {factors}")
    return ScalingSequence(_Linear(factors), tuple(1.0 / c for c in factors),
                           "linear:" + ",".join(f"{c:g}" for c in factors))


def sqrt_shift_scaling(dim: int) -> ScalingSequence:
    """``p_i(n) = n + sqrt(n)`` with limit ratio 1."""
    return ScalingSequence(_SqrtShift(dim), (1.0,) * dim, "n+sqrt")


def make_scaling(identifier: str, dim: int) -> ScalingSequence:
    """``linear`` (p = n), ``linear:<c1>,...`` or ``n+sqrt``."""
    ident = identifier.strip()
    if ident == "linear":
        return linear_scaling([1.0] * dim)
    if ident.startswith("linear:"):
        try:
            c = [float(s) for s in ident[7:].split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad scaling factors in {identifier!r}") from exc
        if len(c) == 1:
            c = c * dim
        if len(c) != dim:
            raise ConfigError(f"scaling {identifier!r} does not match dimension {dim}")
        return linear_scaling(c)
    if ident == "n+sqrt":
        return sqrt_shift_scaling(dim)
    raise ConfigError(f"unknown scaling law {identifier!r}")


def scaling_eval(seq: ScalingSequence, n: int) -> np.ndarray:
    """``p(n)`` as a float vector; rejects ``n < 1`` and non-positive components."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    p = np.atleast_1d(np.asarray(seq.law(n), dtype=float))
    if p.shape != (seq.dim,):
        raise ConfigError(f"scaling {seq.name} returned shape {p.shape}, expected ({seq.dim},)")
    if not np.all(p > 0):
        raise ConfigError(f"scaling {seq.name} has a non-positive component at n={n}: {p}")
    return p


# ---------------------------------------------------------------- config


@dataclass(frozen=True)
class OperatorConfig:
    lattice_tol: float = 1e-10
    quad_tol: float = 1e-12
    domain_trunc_tol: float = 1e-14
    max_refine: int = 6

    def __post_init__(self):
        for name in ("lattice_tol", "quad_tol", "domain_trunc_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")


@dataclass(frozen=True)
class OperatorValue:
    value: float
    bound: float
    window_size: int

    def __float__(self):
        return self.value


# ---------------------------------------------------------------- inner integral


@lru_cache(maxsize=64)
def _psi_rule(psi: TensorKernel, tol: float, refine: int):
    """Nodes, ``psi``-weighted weights and the dropped ``|psi|`` mass."""
    rules, masses, omitted = [], [], []
    for fac in psi.factors:
        edges, om = fac.quadrature_edges(tol / psi.dim)
        x, w = quadrature.composite_rule(edges, refine=refine)
        rules.append((x, w))
        masses.append(float(np.dot(w, np.abs(fac(x)))))
        omitted.append(om)
    nodes, weights = quadrature.tensor_rule(rules)
    weights = weights * psi(nodes)
    dropped = sum(om * math.prod(m for j, m in enumerate(masses) if j != i) for i, om in enumerate(omitted))
    return nodes, weights, dropped


def _require_tensor(psi: KernelND) -> TensorKernel:
    if not isinstance(psi, TensorKernel):
        raise UnsupportedError(f"{psi.identifier} cannot be used as the integral kernel")
    return psi


def _inner_profiles(psi: TensorKernel, f: TestFunction, ks: np.ndarray, p: np.ndarray,
                    cfg: OperatorConfig) -> tuple[np.ndarray, float]:
    """Inner integrals for every row of ``ks`` and a bound on their error."""
    prev = None
    for refine in range(cfg.max_refine + 1):
        nodes, weights, dropped = _psi_rule(psi, cfg.domain_trunc_tol, refine)
        if len(weights) * max(1, len(ks)) > MAX_QUAD_POINTS:
            break
        pts = (nodes[None, :, :] + ks[:, None, :]) / p
        cur = np.sum(f(pts) * weights, axis=-1)
        if prev is not None:
            gap = float(np.max(np.abs(cur - prev))) if len(cur) else 0.0
            if gap <= cfg.quad_tol:
                trunc = dropped * f.sup_norm(MultiIndex.zero(f.dim)) if dropped else 0.0
                return cur, gap + trunc
        prev = cur
    raise NumericError(f"inner integrals against {psi.identifier} did not reach quad_tol={cfg.quad_tol:g}")


def inner_profile(psi, f: TestFunction, k, p, cfg: OperatorConfig | None = None) -> float:
    """``int psi(t) f((t + k) / p) dt`` with breakpoint-split quadrature."""
    cfg = cfg or OperatorConfig()
    psi = _require_tensor(as_kernel_nd(psi))
    ks = np.atleast_2d(np.asarray(k, dtype=float)).reshape(1, psi.dim)
    p = np.atleast_1d(np.asarray(p, dtype=float))
    vals, _ = _inner_profiles(psi, f, ks, p, cfg)
    return float(vals[0])


# ---------------------------------------------------------------- lattice sum


@lru_cache(maxsize=64)
def _radius(phi: KernelND, r: int, tol: float):
    return truncation_radius(phi, r, tol)


def lattice_truncation(phi, x, p, r: int = 0, tol: float = 1e-10) -> Window:
    """Lattice points ``k`` that matter for ``phi(p x - k)``.

    ``Window.tail`` bounds ``sum |phi(p x - k)| |p x - k|^r`` over the
    omitted points.  Raises ``DivergenceError`` if that sum diverges.
    """
    phi = as_kernel_nd(phi)
    check_summable(phi, r)
    center = np.atleast_1d(np.asarray(p, dtype=float)) * np.atleast_1d(np.asarray(x, dtype=float))
    if phi.compact:
        return window(phi, center)
    R, bound = _radius(phi, r, tol)
    w = window(phi, center, R)
    return Window(w.points, R, bound)


def operator_eval_bounded(f: TestFunction, phi, psi, seq: ScalingSequence, n: int, x,
                          cfg: OperatorConfig | None = None) -> OperatorValue:
    """Series value at ``x`` with a certified bound on its numerical error."""
    cfg = cfg or OperatorConfig()
    phi = as_kernel_nd(phi)
    psi = _require_tensor(as_kernel_nd(psi))
    if not (phi.dim == psi.dim == f.dim == seq.dim):
        raise ConfigError("kernels, test function and scaling must share the dimension")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    p = scaling_eval(seq, n)
    win = lattice_truncation(phi, x, p, 0, cfg.lattice_tol)
    ks = win.points.astype(float)
    weights = phi(p * x - ks)
    inner, inner_err = _inner_profiles(psi, f, ks, p, cfg)
    value = float(np.dot(weights, inner))
    bound = inner_err * float(np.sum(np.abs(weights)))
    if win.tail:
        sup_f = f.sup_norm(MultiIndex.zero(f.dim))
        nodes, w0, dropped = _psi_rule(psi, cfg.domain_trunc_tol, 0)
        psi_l1 = float(np.sum(np.abs(w0))) + dropped
        bound += win.tail * sup_f * psi_l1
    return OperatorValue(value, bound, len(ks))


def operator_eval(f: TestFunction, phi, psi, seq: ScalingSequence, n: int, x,
                  cfg: OperatorConfig | None = None) -> float:
    """Value of the sampling series ``S_{p(n)} f`` at the point ``x``."""
    return operator_eval_bounded(f, phi, psi, seq, n, x, cfg).value


def evaluate_points(f: TestFunction, phi, psi, seq: ScalingSequence, n: int, xs,
                    cfg: OperatorConfig | None = None) -> list[OperatorValue]:
    """Batched evaluation over a list of points; the window is rebuilt per point."""
    xs = np.asarray(xs, dtype=float)
    if xs.ndim == 1 and as_kernel_nd(phi).dim == 1:
        xs = xs[:, None]
    return [operator_eval_bounded(f, phi, psi, seq, n, x, cfg) for x in np.atleast_2d(xs)]
