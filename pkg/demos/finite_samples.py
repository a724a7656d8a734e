"""
Estimating zeta from a finite number of copies
==============================================
"""

import math

from cvseq import sampling as smp
from cvseq.gaussian import tmsv

r = 0.8
exact = 2 * math.exp(-2 * r)
for n in (100, 10_000, 1_000_000):
    res = smp.estimate_zeta(tmsv(r), None, n, seed=0)
    print(f"N={n:>8}: {res.estimate:.5f} +- {res.stderr:.5f}   (exact {exact:.5f})")

# with meters of unsharpness 0.2 on both sides
res = smp.estimate_zeta(tmsv(r), (0.2, 0.2), 200_000, seed=1)
print("unsharp readout:", round(res.estimate, 4), "expected", round(exact + 0.4, 4))

# spread of the estimate falls like 1/sqrt(N)
scan = smp.error_scaling_experiment(r, [100, 1000, 10_000], trials=50, seed=2)
for row in scan.rows():
    print("N=%d mean=%.4f std=%.5f" % (row[0], row[1], row[2]))
print("fitted slope:", round(scan.slope, 3))

# copies needed for a one-sigma call, as zeta approaches the bound
for z in (0.4, 1.0, 1.5, 1.9, 1.99):
    print(f"zeta={z}: N >= {smp.required_samples(z, 3)}")
