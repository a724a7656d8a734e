"""
How many pairs can witness the same entanglement?
=================================================

Each pair reads the Duan quantity through weakly coupled meters, so the
state handed on carries some back-action noise. Unsharpness omega^2 trades
the current round's readout noise against later rounds.
"""

import math

import numpy as np

from cvseq import entanglement as ent
from cvseq.gaussian import tmsv

r = 1.0
w = 0.3
sched = ent.UnsharpSchedule.equal(r, [w] * 4)
print("closed form :", [round(ent.zeta_sequential(sched, n), 6) for n in range(1, 5)])
print("mixture sim :", [round(z, 6) for z in ent.oracle_zetas(sched)])
print("detections  :", ent.detection_count(sched))

# the explicit mixture gives the back-action coefficient directly
kappa = ent.backaction_coefficient(ent.MixtureState.pure(tmsv(r)), w, w)
print("measured back-action coefficient:", kappa)

# best single unsharpness, and where a second detection becomes possible
print("omega_opt(1.0) =", ent.optimal_omega(1.0))
print("equal-omega crossover r =", ent.equal_omega_crossover())

# greedy: every round at its largest allowed unsharpness, very strong squeezing
print("greedy chain, r=50:", np.round(ent.greedy_omega_chain(50.0), 6))

# zeta pinned just under 2 in every round
for r in (0.1, 0.3, 0.5, 0.9, 1.2):
    rep = ent.equal_zeta_chain(r)
    print(f"r={r}: D_n={rep.d_n}  omega^2={np.round(rep.omegas, 4)}")
print("step positions in r:", np.round(ent.detection_boundaries(), 4))
print("sharp floor at r=0.5:", 2 * math.exp(-1.0))
