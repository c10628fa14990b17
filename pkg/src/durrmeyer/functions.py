"""Test functions with exact partial derivatives and sup-norm bounds."""

from __future__ import annotations

import math
import re
from functools import lru_cache
from typing import Mapping

import numpy as np
from numpy.polynomial import hermite

from .errors import ConfigError
from .kernels import MultiIndex

__all__ = [
    "TestFunction",
    "Constant",
    "Polynomial",
    "Gaussian",
    "TrigProduct",
    "ScaledNorms",
    "check_derivatives",
    "make_function",
]


class TestFunction:
    """Evaluable ``f: R^N -> R`` with registered derivatives.

    ``sup_norm(h)`` bounds ``|D^h f|`` over ``box`` (``None`` means all of
    ``R^N``); it is ``inf`` when no finite bound exists.
    """

    __test__ = False  # not a pytest class

    dim: int
    name: str
    max_order: int = 4
    box = None

    def __call__(self, x) -> np.ndarray:
        return self.derivative(MultiIndex.zero(self.dim), x)

    def derivative(self, h, x) -> np.ndarray:
        raise NotImplementedError

    def sup_norm(self, h) -> float:
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        return np.array([float(self.derivative(MultiIndex.unit(i, self.dim), x)) for i in range(self.dim)])

    def _pts(self, x):
        x = np.asarray(x, dtype=float)
        if self.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        return x

    def _mi(self, h) -> MultiIndex:
        h = MultiIndex([h] if np.isscalar(h) else h)
        if h.dim != self.dim:
            raise ConfigError(f"multi-index {h.label()} does not match dimension {self.dim}")
        if h.order > self.max_order:
            raise ConfigError(f"{self.name}: derivatives registered only up to order {self.max_order}")
        return h

    def __repr__(self):
        return f"<{type(self).__name__} {self.name} N={self.dim}>"


class Constant(TestFunction):
    def __init__(self, value: float, dim: int):
        self.value = float(value)
        self.dim = dim
        self.name = f"const:{self.value:g}"

    def derivative(self, h, x):
        h = self._mi(h)
        x = self._pts(x)
        return np.full(x.shape[:-1], self.value if h.order == 0 else 0.0)

    def sup_norm(self, h):
        h = self._mi(h)
        return abs(self.value) if h.order == 0 else 0.0


class Polynomial(TestFunction):
    """Sum of monomials ``c * x^e`` given as ``{exponent tuple: coefficient}``."""

    def __init__(self, terms: Mapping[tuple, float], dim: int, name: str | None = None):
        self.terms = {MultiIndex(e): float(c) for e, c in terms.items()}
        if any(e.dim != dim for e in self.terms):
            raise ConfigError("monomial exponents must match the dimension")
        self.dim = dim
        self.max_order = 8
        self.name = name or "poly"

    @property
    def degree(self) -> int:
        return max((e.order for e, c in self.terms.items() if c), default=0)

    def _diff_terms(self, h: MultiIndex):
        out = {}
        for e, c in self.terms.items():
            if not e.dominates(h):
                continue
            coef = c * math.prod(math.perm(ei, hi) for ei, hi in zip(e, h))
            out[e.minus(h)] = out.get(e.minus(h), 0.0) + coef
        return out

    def derivative(self, h, x):
        h = self._mi(h)
        x = self._pts(x)
        out = np.zeros(x.shape[:-1])
        for e, c in self._diff_terms(h).items():
            out = out + c * e.power(x)
        return out

    def sup_norm(self, h):
        h = self._mi(h)
        terms = {e: c for e, c in self._diff_terms(h).items() if c}
        if not terms:
            return 0.0
        if all(e.order == 0 for e in terms):
            return abs(sum(terms.values()))
        return math.inf


@lru_cache(maxsize=32)
def _hermite_sup(k: int) -> float:
    """``max_x |H_k(x) exp(-x^2)|`` with physicists' Hermite ``H_k``."""
    if k == 0:
        return 1.0
    crit = hermite.hermroots([0] * (k + 1) + [1])
    coef = [0] * k + [1]
    vals = np.abs(hermite.hermval(crit, coef) * np.exp(-crit**2))
    return float(vals.max())


class Gaussian(TestFunction):
    """``exp(-|x|^2)``; ``D^h f = prod_i (-1)^h_i H_h_i(x_i) exp(-x_i^2)``."""

    def __init__(self, dim: int):
        self.dim = dim
        self.max_order = 8
        self.name = "gauss"

    def derivative(self, h, x):
        h = self._mi(h)
        x = self._pts(x)
        out = np.ones(x.shape[:-1])
        for i, hi in enumerate(h):
            xi = x[..., i]
            out = out * (-1.0) ** hi * hermite.hermval(xi, [0] * hi + [1]) * np.exp(-xi * xi)
        return out

    def sup_norm(self, h):
        h = self._mi(h)
        return math.prod(_hermite_sup(hi) for hi in h)


class TrigProduct(TestFunction):
    """``prod_i trig_i(freq_i * x_i)`` with ``trig_i`` in {sin, cos}."""

    def __init__(self, kinds, freqs=None):
        kinds = tuple(kinds)
        if any(k not in ("sin", "cos") for k in kinds):
            raise ConfigError(f"trig kinds must be sin or cos: {kinds}")
        self.kinds = kinds
        self.dim = len(kinds)
        self.freqs = tuple(float(w) for w in (freqs or [1.0] * self.dim))
        self.max_order = 16
        self.name = "*".join(kinds)

    def derivative(self, h, x):
        h = self._mi(h)
        x = self._pts(x)
        out = np.ones(x.shape[:-1])
        for i, (kind, w, hi) in enumerate(zip(self.kinds, self.freqs, h)):
            shift = hi + (1 if kind == "cos" else 0)
            # d^k/dx^k sin(wx) = w^k sin(wx + k pi/2)
            phase = shift % 4
            xi = w * x[..., i]
            val = (np.sin(xi), np.cos(xi), -np.sin(xi), -np.cos(xi))[phase]
            out = out * w**hi * val
        return out

    def sup_norm(self, h):
        h = self._mi(h)
        return math.prod(w**hi for w, hi in zip(self.freqs, h))


class ScaledNorms(TestFunction):
    """Wraps a function and multiplies its sup-norm bounds of order >= ``from_order``.

    Used to falsify bound checks deliberately.
    """

    def __init__(self, base: TestFunction, factor: float, from_order: int = 1):
        self.base = base
        self.factor = float(factor)
        self.from_order = from_order
        self.dim = base.dim
        self.max_order = base.max_order
        self.name = f"{base.name}[norms x{self.factor:g}]"

    def derivative(self, h, x):
        return self.base.derivative(h, x)

    def sup_norm(self, h):
        h = self._mi(h)
        s = self.base.sup_norm(h)
        return s * self.factor if h.order >= self.from_order else s


def check_derivatives(f: TestFunction, points, order: int = 2, rtol: float = 1e-5,
                      step: float = 1e-4) -> float:
    """Largest mismatch between registered derivatives and central differences.

    Each ``D^(h + e_i)`` is compared with the central difference of ``D^h``
    along axis ``i``.  Returned as a relative error (scaled by ``max(1, |value|)``).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    worst = 0.0
    for nu in range(order):
        for h in MultiIndex.of_order(nu, f.dim):
            for i in range(f.dim):
                e = np.zeros(f.dim)
                e[i] = step
                fd = (f.derivative(h, pts + e) - f.derivative(h, pts - e)) / (2 * step)
                exact = f.derivative(h.plus(MultiIndex.unit(i, f.dim)), pts)
                err = np.abs(fd - exact) / np.maximum(1.0, np.abs(exact))
                worst = max(worst, float(err.max()))
    return worst


_MONO_RE = re.compile(r"^monomial:([0-9,]+)$")
_CONST_RE = re.compile(r"^const:([-0-9.eE+]+)$")


def make_function(identifier: str, dim: int) -> TestFunction:
    """Build a test function from its identifier.

    ``const:<c>``, ``monomial:<e1>,...,<eN>`` (degree <= 3), ``gauss``,
    ``sin``, ``cos`` (products over coordinates), ``trig:<k1>,...`` with
    ``k`` in {sin, cos}.
    """
    ident = identifier.strip()
    m = _CONST_RE.match(ident)
    if m:
        return Constant(float(m.group(1)), dim)
    m = _MONO_RE.match(ident)
    if m:
        e = tuple(int(c) for c in m.group(1).split(","))
        if len(e) != dim:
            raise ConfigError(f"monomial exponent {e} does not match dimension {dim}")
        if sum(e) > 3:
            raise ConfigError("coordinate polynomials are limited to degree 3")
        return Polynomial({e: 1.0}, dim, name=ident)
    if ident == "gauss":
        return Gaussian(dim)
    if ident in ("sin", "cos"):
        return TrigProduct([ident] * dim)
    if ident.startswith("trig:"):
        kinds = ident[5:].split(",")
        if len(kinds) != dim:
            raise ConfigError("trig kinds must match the dimension")
        return TrigProduct(kinds)
    raise ConfigError(f"unknown test function {identifier!r}")
