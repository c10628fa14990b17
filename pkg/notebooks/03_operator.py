"""Evaluating the sampling series with certified error bounds.

Run with ``python3 notebooks/03_operator.py``.
"""

from durrmeyer.functions import Gaussian, Polynomial, TrigProduct
from durrmeyer.kernels import make_kernel
from durrmeyer.operator import inner_profile, linear_scaling, make_scaling, operator_eval_bounded

b2, fk = make_kernel("bspline2"), make_kernel("f-kernel")
br3 = make_kernel("bochner-riesz:gamma=3", 1)
unit = linear_scaling([1.0])
square = Polynomial({(2,): 1.0}, 1)

# Inner integrals are taken over the fixed support of the integral kernel.
print("inner integral of u^2 at k=3, p=7:", inner_profile(b2, square, [3], [7]), " closed form", (9 + 1 / 6) / 49)

# Linears are reproduced exactly; u^2 at 0 picks up 1/(6 n^2).
for n in (4, 16, 64):
    v = operator_eval_bounded(square, b2, b2, unit, n, [0.0])
    print(f"n={n:3d}: S(u^2)(0) = {v.value:.12e}  1/(6n^2) = {1 / (6 * n * n):.12e}  bound {v.bound:.1e}")

# A sign-changing sampling kernel needs a certified lattice window.
f = TrigProduct(["sin"])
for n in (8, 32, 128):
    v = operator_eval_bounded(f, br3, b2, unit, n, [1.0])
    print(f"n={n:3d}: radial/hat, sin at 1: {v.value:.12f} ({v.window_size} lattice points, bound {v.bound:.1e})")

# Non-integer scaling laws are allowed.
seq = make_scaling("n+sqrt", 1)
v = operator_eval_bounded(Gaussian(1), b2, fk, seq, 100, [0.5])
print(f"p(100) = {seq(100)[0]}, value {v.value:.10f}")
