"""Predicted limits, direct error estimates and empirical rates.

Run with ``python3 notebooks/04_asymptotics.py`` (about 10 s).
"""

import warnings

from durrmeyer.asymptotics import (
    PreconditionWarning,
    bound_terms,
    convergence_report,
    empirical_rate,
    limit_prediction,
    quantitative_constants,
)
from durrmeyer.functions import Gaussian, Polynomial, TrigProduct
from durrmeyer.kernels import make_kernel
from durrmeyer.moments import moment_table
from durrmeyer.operator import linear_scaling

b2, fk = make_kernel("bspline2"), make_kernel("f-kernel")
br3 = make_kernel("bochner-riesz:gamma=3", 1)
unit = linear_scaling([1.0])
ns = [8, 16, 32, 64, 128, 256]

# First order: hat sampling with the one-sided integral kernel, limit (1/3) f'(x).
table = moment_table(b2, fk, 1, absolute_order=2)
f = Gaussian(1)
rep = convergence_report(f, b2, fk, unit, [0.5], ns, 1, table)
fit = empirical_rate(rep)
print(f"first order: slope {fit.slope:.3f}, n*err at n=256 {fit.limit:.5f}, predicted {rep.predicted:.5f}")

consts = quantitative_constants(table, 1)
print(f"constants A1={consts.A:.6f} B1={consts.B:.6f}")
for n, s in zip(rep.ns, rep.scaled_errors):
    bt = bound_terms(f, [0.5], unit, n, table, consts, 1)
    print(f"  n={n:3d}: |n err - limit| = {abs(s - rep.predicted):.5f} <= {bt.total:.5f}")

# Second order: radial sampling kernel, limit (gamma + 1/12) f''(x).
table2 = moment_table(br3, b2, 2)
rep = convergence_report(TrigProduct(["sin"]), br3, b2, unit, [1.0], [8, 16, 32, 64, 128], 2, table2)
fit = empirical_rate(rep)
print(f"\nsecond order: slope {fit.slope:.3f}, n^2 err at n=128 {fit.limit:.6f}, predicted {rep.predicted:.6f}")

# Hat / hat at order 2: the discrete second moment is not constant.  The formal
# limit uses its cell mean; at x = 0 with p(n) = n the offset is always 0, where the moment is 0.
table3 = moment_table(b2, b2, 2)
with warnings.catch_warnings():
    warnings.simplefilter("ignore", PreconditionWarning)
    pred = limit_prediction(Polynomial({(2,): 1.0}, 1), [0.0], (1.0,), table3, 2, phi=b2, seq=unit)
print("\n" + pred.describe())
