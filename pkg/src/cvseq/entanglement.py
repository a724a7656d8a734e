"""Sequential entanglement detection with unsharp quadrature measurements.

Round ``n`` of the protocol hands the outcome-averaged state of round
``n - 1`` to a fresh pair of observers. Each observer couples a squeezed
meter of covariance ``diag(w, u / w)`` to one system quadrature and reads
the meter ``x``. The closed forms below give the Duan quantity

    zeta_n = 1/2 sum_{i<n} (u / w_A,i + u / w_B,i) + 2 exp(-2r) + w_A,n + w_B,n

and the detection counts it implies. :func:`propagate_unsharp_round` and
:func:`mixture_zeta` rebuild the same numbers from explicit Gaussian
mixtures as an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Optional, Sequence, Union

import numpy as np

from .gaussian import GaussianState, duan_zeta, partial_trace, squeezed_ancilla, tmsv
from .measurement import unsharp_couple
from .teleport import Infeasible

DEFAULT_U = 0.25
ZETA_NEAR_TWO = 2.0 - 1e-6
MAX_COMPONENTS = 1024


def _check_omega(w: float) -> float:
    w = float(w)
    if not np.isfinite(w) or w <= 0:
        raise ValueError(f"unsharpness omega^2 must be positive and finite, got {w}")
    return w


@dataclass(frozen=True)
class UnsharpSchedule:
    rounds: tuple  # (omega_sq_A, omega_sq_B) per round
    r: float
    u: float = DEFAULT_U

    def __post_init__(self):
        rounds = tuple((_check_omega(a), _check_omega(b)) for a, b in self.rounds)
        object.__setattr__(self, "rounds", rounds)
        if not np.isfinite(self.u) or self.u <= 0:
            raise ValueError(f"u must be positive, got {self.u}")
        if not np.isfinite(self.r) or self.r < 0:
            raise ValueError(f"r must be non-negative, got {self.r}")

    @classmethod
    def equal(cls, r: float, omega_sq: Sequence[float], u: float = DEFAULT_U) -> "UnsharpSchedule":
        """Both parties use the same unsharpness in every round."""
        return cls(tuple((w, w) for w in omega_sq), r, u)


@dataclass
class DetectionReport:
    r: float
    zeta_target: Optional[float]
    omegas: list
    zetas: list
    d_n: int
    feasible: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "zeta_target": self.zeta_target,
            "omega_sq": list(self.omegas),
            "zeta": list(self.zetas),
            "D_n": self.d_n,
            "feasible": list(self.feasible),
        }


# -- closed forms -----------------------------------------------------------


def zeta_round1(r: float, omega_sq_A: float, omega_sq_B: float) -> float:
    return 2.0 * math.exp(-2.0 * r) + _check_omega(omega_sq_A) + _check_omega(omega_sq_B)


def zeta_sequential(schedule: UnsharpSchedule, n: int) -> float:
    if not 1 <= n <= len(schedule.rounds):
        raise ValueError(f"round {n} outside schedule of length {len(schedule.rounds)}")
    backaction = 0.5 * sum(schedule.u / a + schedule.u / b for a, b in schedule.rounds[: n - 1])
    a, b = schedule.rounds[n - 1]
    return backaction + 2.0 * math.exp(-2.0 * schedule.r) + a + b


def detection_count(schedule: UnsharpSchedule) -> int:
    """Number of leading rounds whose readout witnesses ``zeta < 2``."""
    d = 0
    for n in range(1, len(schedule.rounds) + 1):
        if zeta_sequential(schedule, n) >= 2.0:
            break
        d += 1
    return d


def equal_omega_bound(r: float, omega_sq: float) -> float:
    """Upper bound ``1 - 8 w (w - (1 - exp(-2r)))`` on the rounds with equal ``w``.

    Derived for ``u = 1/4``; round ``n`` detects iff ``n`` is below it.
    """
    w = _check_omega(omega_sq)
    return 1.0 - 8.0 * w * (w - (1.0 - math.exp(-2.0 * r)))


def optimal_omega(r: float) -> float:
    """``sqrt(exp(-r) sinh r)``, the unsharpness maximising :func:`equal_omega_bound`."""
    return math.sqrt(math.exp(-r) * math.sinh(r))


def dnmax_bound(r: float) -> float:
    x = math.exp(-2.0 * r)
    return 3.0 - 2.0 * x * (2.0 - x)


def dnmax_equal(r: float) -> int:
    """Largest detection count reachable with one unsharpness for all rounds."""
    if r <= 0:
        return 0
    return max(math.ceil(dnmax_bound(r)) - 1, 0)


def equal_omega_crossover() -> float:
    """Squeezing above which two equal-unsharpness detections become possible."""
    return 0.5 * math.log(2.0 + math.sqrt(2.0))


def greedy_omega_chain(r: float, max_rounds: int = 64) -> list:
    """Suprema of ``w_n`` when every earlier round sits at its own supremum.

    The list ends with the first non-positive entry (the round that cannot
    detect) or after ``max_rounds`` entries.
    """
    chain = []
    floor_term = 1.0 - math.exp(-2.0 * r)
    for _ in range(max_rounds):
        w = floor_term - sum(1.0 / (8.0 * v) for v in chain)
        chain.append(w)
        if w <= 0:
            break
    return chain


def omega_next_equal_zeta(r: float, zeta_target: float, prior_omegas: Sequence[float]) -> Union[float, Infeasible]:
    """Unsharpness that puts the next round exactly at ``zeta_target``.

    Returns ``0.0`` when only a projective readout reaches the target; that
    round still detects but ends the sequence.
    """
    prior = [float(w) for w in prior_omegas]
    if any(w <= 0 for w in prior):
        return Infeasible("a previous round was projective")
    floor = 2.0 * math.exp(-2.0 * r)
    if zeta_target < floor:
        return Infeasible(f"target {zeta_target} below the sharp-measurement floor {floor}")
    w = 0.5 * (zeta_target - floor) - 0.125 * sum(1.0 / v for v in prior)
    if w < 0:
        return Infeasible(f"round {len(prior) + 1} would need omega^2 = {w:.6g} < 0")
    return w


def equal_zeta_chain(r: float, zeta_target: float = ZETA_NEAR_TWO, max_rounds: int = 64) -> DetectionReport:
    """Iterate :func:`omega_next_equal_zeta` until it becomes infeasible."""
    omegas = []
    while len(omegas) < max_rounds:
        w = omega_next_equal_zeta(r, zeta_target, omegas)
        if isinstance(w, Infeasible):
            break
        omegas.append(w)
        if w == 0.0:
            break
    zetas = [zeta_target] * len(omegas)
    return DetectionReport(
        float(r), float(zeta_target), omegas, zetas, len(omegas), [True] * len(omegas)
    )


def detection_number(r: float, zeta_target: float = ZETA_NEAR_TWO) -> int:
    return equal_zeta_chain(r, zeta_target).d_n


def detection_table(r_grid: Sequence[float], zeta_target: float = ZETA_NEAR_TWO) -> list:
    if not zeta_target < 2.0:
        raise ValueError("zeta_target must be below 2")
    return [equal_zeta_chain(r, zeta_target) for r in r_grid]


def detection_boundaries(zeta_target: float = ZETA_NEAR_TWO, r_max: float = 10.0, tol: float = 1e-10) -> list:
    """Squeezing values where the equal-zeta detection count steps up.

    Entry ``k - 1`` is the smallest ``r`` with at least ``k + 1`` detections,
    for every ``k`` reached below ``r_max``. The count is nondecreasing in
    ``r`` because the floor ``2 exp(-2r)`` only drops.
    """
    top = detection_number(r_max, zeta_target)
    bounds = []
    for k in range(1, top):
        lo, hi = 0.0, r_max
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if detection_number(mid, zeta_target) > k:
                hi = mid
            else:
                lo = mid
        bounds.append(hi)
    return bounds


# -- Gaussian-mixture propagation -------------------------------------------


class MixtureState:
    """Finite convex combination of Gaussian states on the same modes."""

    def __init__(self, components: Sequence, normalize: bool = False):
        comps = [(float(w), s) for w, s in components]
        if not comps:
            raise ValueError("a mixture needs at least one component")
        n = comps[0][1].n_modes
        if any(s.n_modes != n for _, s in comps):
            raise ValueError("all components must share the mode count")
        if any(not w > 0 for w, _ in comps):
            raise ValueError("weights must be positive")
        total = math.fsum(w for w, _ in comps)
        if normalize:
            comps = [(w / total, s) for w, s in comps]
        elif abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {total}, not 1")
        self.components = tuple(comps)

    @classmethod
    def pure(cls, state: GaussianState) -> "MixtureState":
        return cls([(1.0, state)])

    @property
    def n_modes(self) -> int:
        return self.components[0][1].n_modes

    def __len__(self) -> int:
        return len(self.components)

    def moments(self):
        """Mean and covariance of the whole mixture."""
        w = np.array([c[0] for c in self.components])
        means = np.array([c[1].mean for c in self.components])
        covs = np.array([c[1].cov for c in self.components])
        mean = w @ means
        # the factor 2 converts outer products to the covariance normalisation
        second = np.einsum("k,kij->ij", w, covs) + 2.0 * np.einsum("k,ki,kj->ij", w, means, means)
        return mean, second - 2.0 * np.outer(mean, mean)


SETTINGS = tuple(product("xp", repeat=2))


def propagate_unsharp_round(
    state: MixtureState,
    omega_sq_A: float,
    omega_sq_B: float,
    u: float = DEFAULT_U,
    max_components: int = MAX_COMPONENTS,
) -> MixtureState:
    """Outcome-averaged state after one round of unsharp measurements.

    Every component is coupled, for each of the four equally likely
    settings ``(xx, xp, px, pp)``, to fresh meters on modes 0 and 1; the
    meters are then traced out. Components are ordered component-major,
    setting-minor.
    """
    if state.n_modes != 2:
        raise ValueError("propagation expects two-mode components")
    if 4 * len(state) > max_components:
        raise ValueError(
            f"mixture would grow to {4 * len(state)} components (limit {max_components})"
        )
    anc_a = squeezed_ancilla(omega_sq_A, u)
    anc_b = squeezed_ancilla(omega_sq_B, u)
    out = []
    for weight, comp in state.components:
        for qa, qb in SETTINGS:
            coupled = unsharp_couple(unsharp_couple(comp, 0, qa, anc_a), 1, qb, anc_b)
            out.append((0.25 * weight, partial_trace(coupled, [0, 1])))
    return MixtureState(out)


def _readout_variance(state: MixtureState, quadrature: str, sign: float, wa: float, wb: float, u: float) -> float:
    # meters land on modes 2 and 3; read their x quadratures
    anc_a = squeezed_ancilla(wa, u)
    anc_b = squeezed_ancilla(wb, u)
    coupled = MixtureState(
        [
            (w, unsharp_couple(unsharp_couple(s, 0, quadrature, anc_a), 1, quadrature, anc_b))
            for w, s in state.components
        ]
    )
    _, cov = coupled.moments()
    v = np.zeros(8)
    v[4], v[6] = 1.0, sign
    return 0.5 * float(v @ cov @ v)


def mixture_zeta(state, readout: Optional[tuple] = None, u: float = DEFAULT_U) -> float:
    """Duan quantity of a mixture, optionally as read through fresh meters.

    With ``readout=(w_A, w_B)`` the value is the sum of the ``x``-difference
    readout (both meters on ``x``) and the ``p``-sum readout (both on ``p``).
    """
    if isinstance(state, GaussianState):
        state = MixtureState.pure(state)
    if readout is None:
        _, cov = state.moments()
        return duan_zeta(cov, 0, 1)
    wa, wb = (_check_omega(w) for w in readout)
    return _readout_variance(state, "x", -1.0, wa, wb, u) + _readout_variance(state, "p", 1.0, wa, wb, u)


def oracle_zetas(schedule: UnsharpSchedule, max_components: int = MAX_COMPONENTS) -> list:
    """Round-by-round readout ``zeta`` from explicit mixture propagation."""
    state = MixtureState.pure(tmsv(schedule.r))
    zetas = []
    for i, (wa, wb) in enumerate(schedule.rounds):
        zetas.append(mixture_zeta(state, (wa, wb), schedule.u))
        if i + 1 < len(schedule.rounds):
            state = propagate_unsharp_round(state, wa, wb, schedule.u, max_components)
    return zetas


def backaction_coefficient(state: MixtureState, omega_sq_A: float, omega_sq_B: float, u: float = DEFAULT_U) -> float:
    """Measured ``kappa`` in ``zeta_after - zeta_before = kappa (u/w_A + u/w_B)``."""
    before = mixture_zeta(state)
    after = mixture_zeta(propagate_unsharp_round(state, omega_sq_A, omega_sq_B, u))
    return (after - before) / (u / omega_sq_A + u / omega_sq_B)
