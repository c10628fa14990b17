"""Lattice windows, certified tail bounds and chunked lattice sums."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, NumericError, UnsupportedError
from .kernels import BochnerRieszKernel, KernelND, TensorKernel

# Upper limit on lattice points in one truncation window.
MAX_WINDOW_POINTS = 5_000_000
_CHUNK = 2_000_000


def _sphere_area(dim: int) -> float:
    return 2.0 * math.pi ** (dim / 2) / math.gamma(dim / 2)


def support_radius(phi: KernelND) -> float:
    """Euclidean radius of the support, ``inf`` if not compact."""
    if isinstance(phi, TensorKernel) and phi.compact:
        return math.sqrt(sum(max(abs(a), abs(b)) ** 2 for a, b in phi.support_box))
    return math.inf


def check_summable(phi: KernelND, r: int) -> None:
    if phi.compact:
        return
    if isinstance(phi, BochnerRieszKernel):
        if phi.decay_exponent <= phi.dim + r:
            raise DivergenceError(
                f"{phi.identifier} in dimension {phi.dim}: decay exponent "
                f"{phi.decay_exponent:g} <= N + r = {phi.dim + r}; lattice sum of order {r} diverges"
            )
        return
    raise UnsupportedError(f"{phi.identifier}: lattice sums need compact support or a radial envelope")


def tail_bound(phi: KernelND, r: int, w: float) -> float:
    """Bound on ``sum_{|u-k|>w} |phi(u-k)| |u-k|^r``, uniform in ``u``.

    For compact kernels this is zero once ``w`` exceeds the support radius.
    For the Bochner-Riesz kernel the envelope ``C rho^-beta`` is compared with
    an integral over shifted unit cubes.
    """
    check_summable(phi, r)
    if phi.compact:
        return 0.0 if w >= support_radius(phi) else math.inf
    C, x0 = phi.envelope()
    beta = phi.decay_exponent
    n = phi.dim
    s = math.sqrt(n) / 2.0
    t0 = w - 2.0 * s
    if w < x0 or t0 <= 0:
        return math.inf
    total = 0.0
    for j in range(n):
        total += math.comb(n - 1, j) * s ** (n - 1 - j) * t0 ** (r - beta + j + 1) / (beta - r - j - 1)
    return _sphere_area(n) * C * total


def truncation_radius(phi: KernelND, r: int, tol: float) -> tuple[float, float]:
    """Smallest doubling radius ``R`` with ``tail_bound(R) < tol``; returns ``(R, bound)``."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    check_summable(phi, r)
    if phi.compact:
        return support_radius(phi), 0.0
    _, x0 = phi.envelope()
    R = max(x0, math.sqrt(phi.dim) + 1.0)
    while True:
        b = tail_bound(phi, r, R)
        if b < tol:
            break
        R *= 2.0
        if (2 * R + 2) ** phi.dim > 1e15:
            raise NumericError(f"truncation radius for tol={tol:g} is out of reach")
    # tighten by bisection between R/2 and R
    lo, hi = R / 2.0, R
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if tail_bound(phi, r, mid) < tol:
            hi = mid
        else:
            lo = mid
    return hi, tail_bound(phi, r, hi)


@dataclass(frozen=True)
class Window:
    """Integer lattice points around a centre, plus a bound on what was left out."""

    points: np.ndarray  # (K, N) integers
    radius: float
    tail: float


def window(phi: KernelND, center, radius: float | None = None) -> Window:
    """Lattice points ``k`` with ``phi(center - k)`` possibly non-zero.

    For compact tensor kernels these are the points inside the support box.
    Otherwise ``radius`` bounds ``|center - k|``.
    """
    center = np.atleast_1d(np.asarray(center, dtype=float))
    n = phi.dim
    if isinstance(phi, TensorKernel) and phi.compact:
        axes = []
        for c, (a, b) in zip(center, phi.support_box):
            axes.append(np.arange(math.ceil(c - b), math.floor(c - a) + 1))
        grid = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grid], axis=-1)
        return Window(pts, support_radius(phi), 0.0)
    if radius is None or not math.isfinite(radius):
        raise NumericError(f"{phi.identifier} needs a finite truncation radius")
    R = float(radius)
    axes = [np.arange(math.ceil(c - R), math.floor(c + R) + 1) for c in center]
    size = math.prod(len(a) for a in axes)
    if size > MAX_WINDOW_POINTS:
        raise NumericError(f"window with {size} lattice points exceeds budget {MAX_WINDOW_POINTS}")
    grid = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grid], axis=-1)
    d = center - pts
    keep = np.sum(d * d, axis=-1) <= R * R
    return Window(pts[keep], R, math.nan)


def unit_cell_grid(dim: int, density: int) -> np.ndarray:
    """Uniform grid on ``[0, 1)^dim`` with ``density`` points per axis, shape (G, dim)."""
    axis = np.arange(density) / density
    grid = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=-1)


def default_grid_density(dim: int, compact: bool = True) -> int:
    """Points per axis for unit-cell sampling; radial kernels give smooth moments and need fewer."""
    if compact:
        return {1: 1024, 2: 64}.get(dim, 16)
    return {1: 128, 2: 16}.get(dim, 8)


def lattice_sums(phi: KernelND, us, weight, radius: float | None = None,
                 inner: float = 0.0, absolute: bool = False) -> np.ndarray:
    """``sum_k phi(u - k) * weight(k - u)`` for every row ``u`` of ``us``.

    Terms with ``|u - k| <= inner`` are skipped and terms beyond ``radius``
    dropped (radial kernels).  ``absolute`` takes ``|phi|``.
    The reduction order is fixed, so results are deterministic.
    """
    us = np.atleast_2d(np.asarray(us, dtype=float))
    n = phi.dim
    lo = np.floor(us.min(axis=0))
    hi = np.ceil(us.max(axis=0))
    if isinstance(phi, TensorKernel) and phi.compact:
        box = phi.support_box
        axes = [np.arange(math.floor(lo[i] - box[i][1]), math.ceil(hi[i] - box[i][0]) + 1) for i in range(n)]
        R = None
    else:
        if radius is None or not math.isfinite(radius):
            raise NumericError(f"{phi.identifier} needs a finite truncation radius")
        R = float(radius)
        axes = [np.arange(math.floor(lo[i] - R), math.ceil(hi[i] + R) + 1) for i in range(n)]
    grid = np.meshgrid(*axes, indexing="ij")
    ks = np.stack([g.ravel() for g in grid], axis=-1).astype(float)
    out = np.zeros(us.shape[0])
    step = max(1, _CHUNK // max(1, ks.shape[0]))
    kchunk = max(1, _CHUNK) if ks.shape[0] > _CHUNK else ks.shape[0]
    for i0 in range(0, us.shape[0], step):
        ub = us[i0:i0 + step]
        acc = np.zeros(ub.shape[0])
        for j0 in range(0, ks.shape[0], kchunk):
            kb = ks[j0:j0 + kchunk]
            d = ub[:, None, :] - kb[None, :, :]
            dist2 = np.sum(d * d, axis=-1)
            mask = dist2 > inner * inner if inner > 0 else np.ones(dist2.shape, dtype=bool)
            if R is not None:
                mask &= dist2 <= R * R
            vals = np.zeros(dist2.shape)
            if np.any(mask):
                pv = phi(d[mask])
                if absolute:
                    pv = np.abs(pv)
                vals[mask] = pv * weight(-d[mask])
            acc += vals.sum(axis=1)
        out[i0:i0 + step] = acc
    return out
