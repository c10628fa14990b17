"""Gamma and Bessel functions of the first kind for real, non-negative order.

The Bessel function uses two branches:

* an ascending power series evaluated in double-double arithmetic
  (error-free transformations), so that the cancellation between terms
  of size ~exp(x) does not destroy the result for moderate ``x``;
* Hankel's large-argument expansion, truncated at its smallest term.

The crossover point depends on the order; see :func:`bessel_crossover`.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "gamma",
    "bessel_j",
    "bessel_j_scaled",
    "bessel_crossover",
    "bessel_modulus_bound",
    "MAX_BESSEL_ORDER",
]

# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

MAX_BESSEL_ORDER = 12.0

_SPLITTER = 134217729.0  # 2**27 + 1


def gamma(x):
    """Gamma function via the Lanczos approximation.

    Accepts scalars or arrays. Uses the reflection formula for ``x < 0.5``.
    Poles (non-positive integers) return ``inf``.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    flat_x = x.ravel()
    flat_out = out.ravel()
    for i, xi in enumerate(flat_x):
        flat_out[i] = _gamma_scalar(float(xi))
    if out.ndim == 0:
        return float(out)
    return out


def _gamma_scalar(x: float) -> float:
    if x == math.floor(x):
        if x <= 0:
            return math.inf
        if x <= 171:
            return float(math.factorial(int(x) - 1))  # exact at positive integers
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * _gamma_scalar(1.0 - x))
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += c / (x + i)
    t = x + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (x + 0.5) * math.exp(-t) * acc


# --- double-double helpers (vectorised) -------------------------------------

def _two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _split(a):
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def _dd_add(ah, al, bh, bl):
    s, e = _two_sum(ah, bh)
    e = e + (al + bl)
    return _quick_two_sum(s, e)


def _dd_mul(ah, al, bh, bl):
    p, e = _two_prod(ah, bh)
    e = e + (ah * bl + al * bh)
    return _quick_two_sum(p, e)


def _dd_div(ah, al, bh, bl):
    q1 = ah / bh
    ph, pl = _dd_mul(bh, bl, q1, 0.0)
    rh, rl = _dd_add(ah, al, -ph, -pl)
    q2 = rh / bh
    ph, pl = _dd_mul(bh, bl, q2, 0.0)
    rh, rl = _dd_add(rh, rl, -ph, -pl)
    q3 = rh / bh
    q1, q2 = _quick_two_sum(q1, q2)
    return _dd_add(q1, q2, q3, 0.0)


# --- Bessel J ---------------------------------------------------------------

def bessel_crossover(order: float) -> float:
    """Argument above which the Hankel expansion replaces the power series."""
    return max(20.0, 2.5 * order + 12.0)


def _series(order: float, x: np.ndarray) -> np.ndarray:
    """sum_m (-x^2/4)^m / (m! (order+1)_m), in double-double arithmetic."""
    qh, ql = _two_prod(x, x)
    qh, ql = -0.25 * qh, -0.25 * ql
    th = np.ones_like(x)
    tl = np.zeros_like(x)
    sh = np.ones_like(x)
    sl = np.zeros_like(x)
    m = 0
    qmax = float(np.max(-qh)) if x.size else 0.0
    while True:
        m += 1
        dh, dl = _two_sum(float(m), order)
        dh, dl = _dd_mul(dh, dl, float(m), 0.0)
        th, tl = _dd_mul(th, tl, qh, ql)
        th, tl = _dd_div(th, tl, dh, dl)
        sh, sl = _dd_add(sh, sl, th, tl)
        if m > qmax and np.all(np.abs(th) <= 1e-34 * np.maximum(np.abs(sh), 1e-300)):
            break
        if m > 2000:
            raise ArithmeticError("Bessel power series failed to converge")
    return sh + sl


def _hankel_pq(order: float, x: np.ndarray):
    """Hankel P and Q sums, truncated where terms stop decreasing."""
    mu = 4.0 * order * order
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    prev = np.full_like(x, np.inf)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, 200):
        term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        mag = np.abs(term)
        active &= mag < prev
        if not np.any(active):
            break
        contrib = np.where(active, term, 0.0)
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2:
            q = q + sign * contrib
        else:
            p = p + sign * contrib
        prev = mag
        if np.all(mag[active] < 1e-17) or np.all(term == 0.0):
            break
    return p, q


def _hankel(order: float, x: np.ndarray) -> np.ndarray:
    p, q = _hankel_pq(order, x)
    theta = math.fmod((0.5 * order + 0.25) * math.pi, 2.0 * math.pi)
    cx, sx = np.cos(x), np.sin(x)
    ct, st = math.cos(theta), math.sin(theta)
    cos_chi = cx * ct + sx * st
    sin_chi = sx * ct - cx * st
    return np.sqrt(2.0 / (math.pi * x)) * (p * cos_chi - q * sin_chi)


def bessel_j(order: float, x):
    """Bessel function of the first kind ``J_order(x)``.

    Parameters
    ----------
    order : float
        Real order, ``0 <= order <= MAX_BESSEL_ORDER``.
    x : float or array_like
        Non-negative arguments.

    Returns
    -------
    float or ndarray
        Values of ``J_order`` at ``x``.

    Raises
    ------
    ValueError
        If the order or any argument is negative, or the order exceeds the
        supported range.
    """
    order = float(order)
    if order < 0:
        raise ValueError(f"Bessel order must be non-negative, got {order}")
    if order > MAX_BESSEL_ORDER:
        raise ValueError(f"Bessel order {order} exceeds supported maximum {MAX_BESSEL_ORDER}")
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(xa < 0) or np.any(np.isnan(xa)):
        raise ValueError("Bessel argument must be non-negative")
    out = np.empty_like(xa)
    xc = bessel_crossover(order)
    low = xa <= xc
    if np.any(low):
        xl = xa[low]
        pref = np.where(xl > 0, (0.5 * xl) ** order, 1.0 if order == 0 else 0.0)
        out[low] = pref / gamma(order + 1.0) * _series(order, xl)
    if np.any(~low):
        out[~low] = _hankel(order, xa[~low])
    return float(out[0]) if scalar else out


def bessel_j_scaled(order: float, x):
    """``x**(-order) * J_order(x)``, continuous at ``x = 0``.

    The radial Bochner-Riesz profile needs this combination; computing it
    directly avoids the ``0/0`` at the origin.
    """
    order = float(order)
    if order < 0 or order > MAX_BESSEL_ORDER:
        raise ValueError(f"unsupported Bessel order {order}")
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(xa < 0):
        raise ValueError("Bessel argument must be non-negative")
    out = np.empty_like(xa)
    low = xa <= bessel_crossover(order)
    if np.any(low):
        out[low] = 2.0 ** (-order) / gamma(order + 1.0) * _series(order, xa[low])
    if np.any(~low):
        xh = xa[~low]
        out[~low] = _hankel(order, xh) * xh ** (-order)
    return float(out[0]) if scalar else out


def bessel_modulus_bound(order: float, x0: float) -> float:
    """Upper bound K with ``|J_order(x)| <= K * sqrt(2 / (pi x))`` for ``x >= x0``.

    For ``order <= 1/2`` the modulus ``sqrt(J^2 + Y^2)`` satisfies ``x M^2 <= 2/pi``.
    For larger orders ``x M^2`` decreases to ``2/pi`` (Nicholson), so its value
    at ``x0`` bounds it; that value is taken from the asymptotic series of
    ``M^2`` plus the modulus of the last retained term as a margin.
    """
    if order <= 0.5:
        return 1.0
    mu = 4.0 * order * order
    total = 1.0
    term = 1.0
    last = 0.0
    for k in range(1, 40):
        # coefficient of (2k-1)!!/(2k)!! * prod (mu - (2j-1)^2) / (2x)^(2k)
        term = term * (2 * k - 1) / (2 * k) * (mu - (2 * k - 1) ** 2) / (2.0 * x0) ** 2
        if abs(term) < 1e-16 or (last and abs(term) > abs(last)):
            break
        total += term
        last = term
    return math.sqrt(total + abs(last))
