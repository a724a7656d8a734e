"""
Sharing one squeezed resource across several teleportation rounds
=================================================================

Alice splits her half of a two-mode squeezed vacuum on a beam splitter,
spends the transmitted part on one teleportation and keeps the rest.
"""

import numpy as np

from cvseq import duan_zeta, tmsv
from cvseq import teleport as tp

r = 0.8
print("resource zeta:", duan_zeta(tmsv(r)), "(classical bound is 2)")

# one round, sweep the transmissivity
for tau in np.linspace(0, 1, 11):
    print(f"tau={tau:.1f}  F={tp.fidelity_closed(r, [tau]):.4f}  zeta={tp.zeta_round(r, [tau]):.4f}")

# below this the teleported state is no better than measure-and-prepare
print("threshold tau:", tp.nonclassical_threshold(r))

# the same number from a full simulation: split, Bell measurement, feed-forward
res = tp.simulate_round(r, [0.5], samples=50_000, seed=1)
print(f"simulated F(tau=0.5) = {res.mean:.4f} +- {res.stderr:.4f}, closed form {tp.fidelity_closed(r, [0.5]):.4f}")

# how many rounds at just-above-classical fidelity?
sched = tp.min_transmissivity_schedule(r, 0.501)
print("minimal transmissivities for F=0.501:", np.round(sched, 4))

# equal-fidelity planning: every round gets 1/n of the resource
plan = tp.equal_fidelity_plan(0.51)
print("equal fidelity F>=0.51:", plan.n_max, "rounds at r =", round(plan.r_opt, 4))
print("first taus:", plan.taus[:4], "... last:", plan.taus[-1])

# equal transmissivity instead, r fixed: there is a best tau
taus = np.linspace(0.02, 1, 50)
rounds = [tp.equal_transmissivity_max_rounds(r, t) for t in taus]
best = int(np.argmax(rounds))
print(f"equal tau at r={r}: best tau ~ {taus[best]:.2f} gives {rounds[best]} rounds")
