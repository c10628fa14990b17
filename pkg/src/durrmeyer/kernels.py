"""Kernels for the Durrmeyer sampling series.

One-dimensional building blocks (the central B-spline of order 2 and the
one-sided kernel ``F``), tensor products of them, and the radial
Bochner-Riesz kernel.  Kernels that have a closed-form Fourier transform
expose it, with partial derivatives up to order 2, under the convention
``hat g(v) = int g(x) exp(-i x.v) dx``.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from .errors import ConfigError, DomainError, UnsupportedError
from .special import MAX_BESSEL_ORDER, bessel_j, bessel_j_scaled, bessel_modulus_bound, gamma

__all__ = [
    "MultiIndex",
    "ExpTail",
    "Kernel1D",
    "KernelND",
    "TensorKernel",
    "BochnerRieszKernel",
    "bspline2_eval",
    "f_kernel_eval",
    "bessel_j_eval",
    "bochner_riesz_eval",
    "BSPLINE2",
    "F_KERNEL",
    "tensor_product",
    "fourier_eval",
    "as_kernel_nd",
    "make_kernel",
]


class MultiIndex(tuple):
    """Tuple of non-negative integers with multi-index arithmetic.

    ``+`` and ``-`` are *not* overloaded (tuples concatenate); use
    :meth:`plus` and :meth:`minus`.
    """

    def __new__(cls, components):
        comps = tuple(int(c) for c in components)
        if not comps:
            raise DomainError("multi-index needs at least one component")
        if any(c < 0 for c in comps):
            raise DomainError(f"multi-index components must be >= 0: {comps}")
        return super().__new__(cls, comps)

    @classmethod
    def zero(cls, dim: int) -> "MultiIndex":
        return cls((0,) * dim)

    @classmethod
    def unit(cls, i: int, dim: int, times: int = 1) -> "MultiIndex":
        comps = [0] * dim
        comps[i] = times
        return cls(comps)

    @classmethod
    def of_order(cls, order: int, dim: int) -> list["MultiIndex"]:
        """All multi-indices of total order ``order``, in descending lexicographic order."""
        out = [cls(c) for c in itertools.product(range(order + 1), repeat=dim) if sum(c) == order]
        return sorted(out, reverse=True)

    @property
    def dim(self) -> int:
        return len(self)

    @property
    def order(self) -> int:
        return sum(self)

    @property
    def factorial(self) -> int:
        return math.prod(math.factorial(c) for c in self)

    def dominates(self, other: Sequence[int]) -> bool:
        return len(other) == len(self) and all(o <= s for s, o in zip(self, other))

    def binom(self, j: Sequence[int]) -> int:
        if not self.dominates(j):
            raise DomainError(f"binomial ({self} over {tuple(j)}) needs j <= h componentwise")
        return math.prod(math.comb(s, o) for s, o in zip(self, j))

    def plus(self, other: Sequence[int]) -> "MultiIndex":
        return MultiIndex(s + o for s, o in zip(self, other))

    def minus(self, other: Sequence[int]) -> "MultiIndex":
        return MultiIndex(s - o for s, o in zip(self, other))

    def below(self) -> Iterator["MultiIndex"]:
        """Every ``j`` with ``0 <= j <= self`` componentwise."""
        for c in itertools.product(*(range(s + 1) for s in self)):
            yield MultiIndex(c)

    def power(self, x) -> np.ndarray:
        """``x**h = prod_i x_i**h_i`` over the last axis of ``x``."""
        x = np.asarray(x, dtype=float)
        out = np.ones(x.shape[:-1])
        for i, hi in enumerate(self):
            if hi:
                out = out * x[..., i] ** hi
        return out

    def label(self) -> str:
        return "(" + ",".join(str(c) for c in self) + ")"


# --- one-dimensional kernels --------------------------------------------------

@dataclass(frozen=True)
class ExpTail:
    """Right tail ``amplitude * exp(-rate * x)`` valid for ``x >= start``."""

    amplitude: float
    rate: float
    start: float

    def weighted_mass(self, T: float, power: int) -> float:
        """``int_T^inf t**power * amplitude * exp(-rate t) dt`` for ``T >= max(start, 0)``."""
        c = self.rate
        total = 0.0
        for j in range(power + 1):
            total += math.factorial(power) / math.factorial(j) * T**j / c ** (power - j + 1)
        return self.amplitude * math.exp(-c * T) * total

    def truncation_point(self, tol: float, power: int = 0) -> float:
        """Smallest (up to bisection) ``T`` whose weighted tail mass is below ``tol``."""
        lo = max(self.start, 0.0)
        if self.weighted_mass(lo, power) <= tol:
            return lo
        hi = lo + 1.0
        while self.weighted_mass(hi, power) > tol:
            hi = 2.0 * hi + 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if self.weighted_mass(mid, power) > tol:
                lo = mid
            else:
                hi = mid
        return hi


@dataclass(frozen=True)
class Kernel1D:
    """A one-dimensional kernel with support and smoothness metadata.

    ``transform(v, order)`` returns the ``order``-th derivative of the
    Fourier transform, when a closed form is known.
    """

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float]
    breakpoints: tuple[float, ...]
    right_tail: Optional[ExpTail] = None
    transform: Optional[Callable[[np.ndarray, int], np.ndarray]] = None
    nonnegative: bool = True

    def __post_init__(self):
        bp = self.breakpoints
        if any(b >= c for b, c in zip(bp[:-1], bp[1:])):
            raise DomainError("breakpoints must be strictly increasing")
        lo, hi = self.support
        if any(b < lo or b > hi for b in bp):
            raise DomainError("breakpoints must lie in the support")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.asarray(self.func(x), dtype=float)
        return float(out) if out.ndim == 0 else out

    @property
    def compact(self) -> bool:
        return all(math.isfinite(s) for s in self.support)

    def quadrature_edges(self, tol: float, power: int = 0, max_piece: float = 2.0) -> tuple[np.ndarray, float]:
        """Piece boundaries for integrating ``t**power * kernel`` and the omitted tail bound."""
        lo, hi = self.support
        omitted = 0.0
        if not math.isfinite(lo):
            raise UnsupportedError(f"{self.name}: left tails are not supported")
        if not math.isfinite(hi):
            if self.right_tail is None:
                raise UnsupportedError(f"{self.name}: infinite support without a tail model")
            T = self.right_tail.truncation_point(tol, power)
            T = max(T, self.breakpoints[-1] if self.breakpoints else lo)
            omitted = self.right_tail.weighted_mass(T, power)
            hi = T
        edges = sorted({lo, hi, *(b for b in self.breakpoints if lo <= b <= hi)})
        pieces = [edges[0]]
        for a, b in zip(edges[:-1], edges[1:]):
            m = max(1, int(math.ceil((b - a) / max_piece)))
            pieces.extend(np.linspace(a, b, m + 1)[1:])
        return np.asarray(pieces), omitted


def bspline2_eval(x):
    """Central B-spline of order 2, ``(1 - |x|)`` on ``(-1, 1)`` and 0 elsewhere."""
    x = np.asarray(x, dtype=float)
    out = np.where(np.abs(x) < 1.0, 1.0 - np.abs(x), 0.0)
    return float(out) if out.ndim == 0 else out


def f_kernel_eval(x):
    """``x + 1`` on ``[-1, 0]``, ``exp(-x)/2`` for ``x > 0``, 0 otherwise.

    At the jump ``x = 0`` the left branch is used, so ``F(0) = 1``.
    """
    x = np.asarray(x, dtype=float)
    pos = np.exp(-np.maximum(x, 0.0)) * 0.5
    out = np.where((x >= -1.0) & (x <= 0.0), x + 1.0, np.where(x > 0.0, pos, 0.0))
    return float(out) if out.ndim == 0 else out


def _sinc_half(v):
    """``s(v) = sin(v/2)/(v/2)`` and its first two derivatives."""
    v = np.asarray(v, dtype=float)
    w = 0.5 * v
    small = np.abs(w) < 1e-3
    ws = np.where(small, 1.0, w)
    sw, cw = np.sin(ws), np.cos(ws)
    s = np.where(small, 1 - v**2 / 24 + v**4 / 1920, sw / ws)
    ds = np.where(small, -v / 12 + v**3 / 480, 0.5 * (cw / ws - sw / ws**2))
    d2s = np.where(
        small,
        -1.0 / 12 + v**2 / 160,
        0.25 * (-sw / ws - 2 * cw / ws**2 + 2 * sw / ws**3),
    )
    return s, ds, d2s


def _bspline2_transform(v, order: int):
    s, ds, d2s = _sinc_half(v)
    if order == 0:
        return s * s
    if order == 1:
        return 2 * s * ds
    if order == 2:
        return 2 * ds * ds + 2 * s * d2s
    raise UnsupportedError("B-spline transform derivatives are available up to order 2")


BSPLINE2 = Kernel1D(
    name="bspline2",
    func=bspline2_eval,
    support=(-1.0, 1.0),
    breakpoints=(-1.0, 0.0, 1.0),
    transform=_bspline2_transform,
)

F_KERNEL = Kernel1D(
    name="f-kernel",
    func=f_kernel_eval,
    support=(-1.0, math.inf),
    breakpoints=(-1.0, 0.0),
    right_tail=ExpTail(amplitude=0.5, rate=1.0, start=0.0),
)


def bessel_j_eval(order: float, x: float) -> float:
    """Scalar ``J_order(x)``; raises :class:`DomainError` for negative input."""
    if order < 0 or x < 0:
        raise DomainError(f"J_order(x) needs order >= 0 and x >= 0, got ({order}, {x})")
    return float(bessel_j(order, x))


# --- multivariate kernels -------------------------------------------------------

class KernelND:
    """Kernel on ``R^N``.  Subclasses implement evaluation over the last axis."""

    dim: int
    identifier: str
    decay_exponent: float = math.inf
    compact: bool = False
    nonnegative: bool = False

    def __call__(self, x) -> np.ndarray:
        raise NotImplementedError

    @property
    def has_fourier(self) -> bool:
        return False

    def fourier(self, v, h: MultiIndex) -> np.ndarray:
        raise UnsupportedError(f"{self.identifier} has no closed-form Fourier transform")

    def _points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        if x.shape[-1] != self.dim:
            raise DomainError(f"expected points with last axis {self.dim}, got shape {x.shape}")
        return x

    def __repr__(self):
        return f"<{type(self).__name__} {self.identifier}>"


class TensorKernel(KernelND):
    """``x -> prod_i factor_i(x_i)``."""

    def __init__(self, factors: Sequence[Kernel1D]):
        if not factors:
            raise DomainError("tensor product needs at least one factor")
        self.factors = tuple(factors)
        self.dim = len(self.factors)
        names = {f.name for f in self.factors}
        if len(names) == 1:
            self.identifier = f"tensor:{self.factors[0].name}^{self.dim}"
        else:
            self.identifier = "tensor:" + "*".join(f.name for f in self.factors)
        self.compact = all(f.compact for f in self.factors)
        self.decay_exponent = math.inf
        self.nonnegative = all(f.nonnegative for f in self.factors)

    def __call__(self, x):
        x = self._points(x)
        out = np.ones(x.shape[:-1])
        for i, f in enumerate(self.factors):
            out = out * f(x[..., i])
        return out

    @property
    def support_box(self) -> list[tuple[float, float]]:
        return [f.support for f in self.factors]

    @property
    def breakpoint_lattice(self) -> list[tuple[float, ...]]:
        return [f.breakpoints for f in self.factors]

    @property
    def has_fourier(self) -> bool:
        return all(f.transform is not None for f in self.factors)

    def fourier(self, v, h: MultiIndex) -> np.ndarray:
        if not self.has_fourier:
            raise UnsupportedError(f"{self.identifier} has no closed-form Fourier transform")
        v = self._points(v)
        h = MultiIndex(h)
        out = np.ones(v.shape[:-1])
        for i, f in enumerate(self.factors):
            out = out * f.transform(v[..., i], h[i])
        return out


class BochnerRieszKernel(KernelND):
    """Radial kernel whose transform is ``(1 - |v|^2)^gamma`` on the unit ball.

    ``b(x) = 2^gamma Gamma(gamma+1) (2 pi)^(-N/2) |x|^(-N/2-gamma) J_(N/2+gamma)(|x|)``.
    """

    def __init__(self, gamma_: float, dim: int):
        if not gamma_ > 0:
            raise DomainError(f"Bochner-Riesz exponent must be > 0, got {gamma_}")
        if dim < 1:
            raise DomainError("dimension must be >= 1")
        self.gamma = float(gamma_)
        self.dim = int(dim)
        self.order = self.dim / 2 + self.gamma
        if self.order > MAX_BESSEL_ORDER:
            raise DomainError(f"Bessel order {self.order} exceeds supported maximum")
        self.prefactor = 2.0**self.gamma * gamma(self.gamma + 1.0) / (2.0 * math.pi) ** (self.dim / 2)
        self.identifier = f"bochner-riesz:gamma={self.gamma:g}"
        self.decay_exponent = self.dim / 2 + self.gamma + 0.5
        self.compact = False
        self.nonnegative = False

    def profile(self, r) -> np.ndarray:
        return self.prefactor * bessel_j_scaled(self.order, np.asarray(r, dtype=float))

    def __call__(self, x):
        x = self._points(x)
        r = np.sqrt(np.sum(x * x, axis=-1))
        return self.profile(r)

    def envelope(self) -> tuple[float, float]:
        """``(C, x0)`` with ``|b(x)| <= C |x|^(-decay_exponent)`` for ``|x| >= x0``."""
        x0 = max(20.0, 2.0 * self.order)
        k = bessel_modulus_bound(self.order, x0)
        return self.prefactor * math.sqrt(2.0 / math.pi) * k, x0

    @property
    def has_fourier(self) -> bool:
        return True

    def fourier(self, v, h: MultiIndex) -> np.ndarray:
        v = self._points(v)
        h = MultiIndex(h)
        if h.dim != self.dim:
            raise DomainError("multi-index dimension mismatch")
        g = self.gamma
        s = np.sum(v * v, axis=-1)
        inside = s < 1.0
        one_minus = np.where(inside, 1.0 - s, 1.0)

        def gp(k):  # k-th derivative of (1-s)^g in s, inside the ball
            c = 1.0
            for j in range(k):
                c *= -(g - j)
            return c * one_minus ** (g - k)

        nz = [i for i, c in enumerate(h) for _ in range(c)]
        if h.order == 0:
            out = gp(0)
        elif h.order == 1:
            out = gp(1) * 2 * v[..., nz[0]]
        elif h.order == 2:
            i, j = nz
            out = gp(2) * 4 * v[..., i] * v[..., j] + (gp(1) * 2 if i == j else 0.0)
        else:
            raise UnsupportedError("Bochner-Riesz transform derivatives are available up to order 2")
        return np.where(inside, out, 0.0)


def bochner_riesz_eval(x, gamma_: float, dim: int) -> float:
    """Value of the Bochner-Riesz kernel at a single point ``x`` of ``R^dim``."""
    if not gamma_ > 0:
        raise DomainError(f"Bochner-Riesz exponent must be > 0, got {gamma_}")
    k = BochnerRieszKernel(gamma_, dim)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(k(x))


def tensor_product(factors: Sequence[Kernel1D]) -> TensorKernel:
    return TensorKernel(factors)


def as_kernel_nd(kernel) -> KernelND:
    if isinstance(kernel, KernelND):
        return kernel
    if isinstance(kernel, Kernel1D):
        return TensorKernel([kernel])
    raise ConfigError(f"not a kernel: {kernel!r}")


def fourier_eval(kernel, v, h) -> float | np.ndarray:
    """Partial derivative ``D^h`` of the kernel's Fourier transform at ``v``."""
    k = as_kernel_nd(kernel)
    if not k.has_fourier:
        raise UnsupportedError(f"{k.identifier} has no closed-form Fourier transform")
    v = np.asarray(v, dtype=float)
    h = MultiIndex([h] if np.isscalar(h) else h)
    if h.order > 2:
        raise UnsupportedError("transform derivatives are available up to order 2")
    out = k.fourier(v, h)
    return float(out) if np.ndim(out) == 0 else out


_ONE_D = {"bspline2": BSPLINE2, "f-kernel": F_KERNEL}
_BR_RE = re.compile(r"^bochner-riesz:gamma=([0-9.eE+-]+)$")
_TENSOR_RE = re.compile(r"^tensor:([a-z0-9-]+)\^([0-9]+)$")


def make_kernel(identifier: str, dim: int | None = None) -> KernelND:
    """Build a kernel from its catalog identifier.

    Identifiers: ``bspline2``, ``f-kernel`` (1-D), ``bochner-riesz:gamma=<g>``
    (dimension from ``dim``), ``tensor:<id>^N``.
    """
    ident = identifier.strip()
    if ident in _ONE_D:
        if dim not in (None, 1):
            raise ConfigError(f"{ident} is one-dimensional; use tensor:{ident}^{dim}")
        return TensorKernel([_ONE_D[ident]])
    m = _BR_RE.match(ident)
    if m:
        if dim is None:
            raise ConfigError("Bochner-Riesz kernel needs a dimension")
        try:
            return BochnerRieszKernel(float(m.group(1)), dim)
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc
    m = _TENSOR_RE.match(ident)
    if m:
        base, n = m.group(1), int(m.group(2))
        if base not in _ONE_D:
            raise ConfigError(f"unknown 1-D kernel {base!r}")
        if n < 1 or (dim is not None and n != dim):
            raise ConfigError(f"tensor power {n} does not match dimension {dim}")
        return TensorKernel([_ONE_D[base]] * n)
    raise ConfigError(f"unknown kernel identifier {identifier!r}")
