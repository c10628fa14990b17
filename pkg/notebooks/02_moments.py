"""Moments: lattice sums, quadrature and the transform criterion.

Run with ``python3 notebooks/02_moments.py`` (about 10 s).
"""

from durrmeyer.kernels import make_kernel
from durrmeyer.moments import (
    constancy_check,
    continuous_algebraic_moment,
    discrete_absolute_moment,
    fourier_moment_check,
    moment_table,
    tail_decay_check,
)

b2, fk = make_kernel("bspline2"), make_kernel("f-kernel")
br3 = make_kernel("bochner-riesz:gamma=3", 1)

print("continuous moments: int t^2 hat =", continuous_algebraic_moment(b2, (2,)),
      " int t one-sided =", continuous_algebraic_moment(fk, (1,)))

# The discrete second moment of the hat function is u(1-u) on the unit cell, so it is not constant.
res = constancy_check(b2, (2,))
print(f"hat, second discrete moment: min {res.minimum}, max {res.maximum}, cell mean {res.mean:.6f}, "
      f"constant: {res.is_constant}")
fc = fourier_moment_check(b2, (2,))
print("transform criterion for the same moment fails at", [k for k, _ in fc.offenders][:2], "...")

# The radial kernel with gamma=3 has constant second moment 2 gamma = 6.
res = constancy_check(br3, (2,), truncation_tol=1e-3)
fc = fourier_moment_check(br3, (2,))
print(f"radial kernel, second moment: lattice {res.mean:.8f} (spread {res.max_deviation:.1e}), "
      f"transform criterion {fc.moment}, passes {fc.passes}")

print("\nabsolute moments of the hat:", [discrete_absolute_moment(b2, nu) for nu in (0, 1, 2)])
print("uniform tails of the radial kernel (order 2):")
for row in tail_decay_check(br3, 2, [4, 8, 16, 32, 64]):
    print(f"  w = {row['w']:5.0f}: {row['sup_tail']:.4f}")

print("\nmoment table, hat / one-sided, first order:")
print(moment_table(b2, fk, 1, absolute_order=2).to_csv())
