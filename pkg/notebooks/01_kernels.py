"""Kernels: the building blocks, their tensor products and the radial family.

Run with ``python3 notebooks/01_kernels.py``.
"""

import math

import numpy as np

from durrmeyer.kernels import BochnerRieszKernel, fourier_eval, make_kernel

# The hat function and the one-sided kernel with an exponential right tail.
b2 = make_kernel("bspline2")
fk = make_kernel("f-kernel")
xs = np.array([-1.5, -1.0, -0.5, 0.0, 0.25, 1.0, 2.0])
print("x        hat       one-sided")
for x, a, b in zip(xs, b2(xs), fk(xs)):
    print(f"{x:6.2f}  {a:8.5f}  {b:10.7f}")

# Tensor products evaluate coordinatewise.
hat2 = make_kernel("tensor:bspline2^2")
print("\nhat x hat at (0.5, 0.5):", float(hat2([0.5, 0.5])))

# The radial kernel has a removable singularity at the origin and decays like |x|^-(N/2+gamma+1/2).
for dim in (1, 2):
    k = BochnerRieszKernel(3.0, dim)
    C, x0 = k.envelope()
    print(f"\nradial kernel, gamma=3, N={dim}: value at 0 = {float(k(np.zeros(dim))):.10f}, "
          f"decay exponent {k.decay_exponent}, |b(x)| <= {C:.3f} |x|^-{k.decay_exponent} beyond |x| = {x0}")
print("closed forms at 0:", 16 / (35 * math.pi), 1 / (16 * math.pi))

# Closed-form transforms.  The hat transform vanishes at 2k pi but its second derivative does not.
for v in (0.0, 2 * math.pi, 4 * math.pi):
    print(f"hat transform at {v:7.4f}: value {fourier_eval(b2, [v], 0): .3e}, "
          f"second derivative {fourier_eval(b2, [v], 2): .10f}")
