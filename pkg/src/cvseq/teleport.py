"""Sequential coherent-state teleportation with a split resource.

Each round the sender mixes her half of the shared two-mode squeezed
vacuum with vacuum on a beam splitter of transmissivity ``tau_i``, uses the
transmitted port for a Bell measurement and keeps the reflected port for the
next round. Only the product

    tau_t(n) = (1 - tau_1) ... (1 - tau_{n-1}) tau_n

enters the round-``n`` fidelity and nonclassicality.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np
from scipy import optimize

from . import measurement as meas
from .gaussian import (
    GaussianState,
    apply,
    beam_splitter,
    coherent,
    partial_trace,
    tensor,
    tmsv,
    vacuum,
)

CLASSICAL_FIDELITY = 0.5
CLASSICAL_ZETA = 2.0
BISECTION_TOL = 1e-10


@dataclass(frozen=True)
class Infeasible:
    """Typed "no solution" answer; falsy so callers can branch on it."""

    reason: str

    def __bool__(self) -> bool:
        return False


# -- schedules --------------------------------------------------------------


def _check_taus(taus: Sequence[float]) -> list:
    taus = [float(t) for t in taus]
    for t in taus:
        if not np.isfinite(t) or not 0.0 <= t <= 1.0:
            raise ValueError(f"transmissivities must lie in [0, 1], got {t}")
    return taus


def _check_r(r: float) -> float:
    r = float(r)
    if not np.isfinite(r) or r < 0:
        raise ValueError(f"squeezing strength must be finite and non-negative, got {r}")
    return r


def transmitted_fraction(taus: Sequence[float], n: Optional[int] = None) -> float:
    """Fraction of the original resource reaching the round-``n`` Bell measurement."""
    taus = _check_taus(taus)
    n = len(taus) if n is None else int(n)
    if not 1 <= n <= len(taus):
        raise ValueError(f"round {n} outside schedule of length {len(taus)}")
    reflected = 1.0
    for t in taus[: n - 1]:
        reflected *= 1.0 - t
    return reflected * taus[n - 1]


@dataclass(frozen=True)
class SplitSchedule:
    taus: tuple
    r: float

    def __post_init__(self):
        object.__setattr__(self, "taus", tuple(_check_taus(self.taus)))
        object.__setattr__(self, "r", _check_r(self.r))

    def transmitted(self, n: int) -> float:
        return transmitted_fraction(self.taus, n)

    def fidelities(self) -> list:
        return [fidelity_closed(self.r, self.taus, n) for n in range(1, len(self.taus) + 1)]


# -- closed forms -----------------------------------------------------------


def zeta_from_transmitted(r: float, tau_t):
    c, s = np.cosh(2 * r), np.sinh(2 * r)
    tau_t = np.asarray(tau_t, dtype=float)
    return 1.0 + c + tau_t * (c - 1.0) - 2.0 * np.sqrt(tau_t) * s


def fidelity_from_transmitted(r: float, tau_t):
    c, s = np.cosh(2 * r), np.sinh(2 * r)
    tau_t = np.asarray(tau_t, dtype=float)
    return 2.0 / (3.0 - tau_t + (1.0 + tau_t) * c - 2.0 * np.sqrt(tau_t) * s)


def fidelity_closed(r: float, taus: Sequence[float], n: Optional[int] = None) -> float:
    """Average round-``n`` fidelity ``2 / (3 - t + (1 + t) cosh 2r - 2 sqrt(t) sinh 2r)``."""
    r = _check_r(r)
    return float(fidelity_from_transmitted(r, transmitted_fraction(taus, n)))


def zeta_round(r: float, taus: Sequence[float], n: Optional[int] = None) -> float:
    """Duan quantity of the round-``n`` transmitted pair ``(B, A_T)``."""
    r = _check_r(r)
    t = transmitted_fraction(taus, n)
    return float(2.0 - 2.0 * np.sinh(r) * (2.0 * np.sqrt(t) * np.cosh(r) - (1.0 + t) * np.sinh(r)))


def zeta_for_fidelity(F: float) -> float:
    """Teleportation fidelity and Duan quantity are tied by ``F = 2 / (2 + zeta)``."""
    return 2.0 / F - 2.0


def transmitted_threshold(r: float, zeta_target: float = CLASSICAL_ZETA) -> float:
    """Smallest ``tau_t`` with ``zeta <= zeta_target`` (``inf`` if none exists).

    ``zeta`` is a convex quadratic in ``sqrt(tau_t)`` whose minimum lies at
    ``coth r >= 1``, so on ``[0, 1]`` it decreases and the smaller root is
    the threshold.
    """
    c, s = np.cosh(2 * r), np.sinh(2 * r)
    a = c - 1.0
    b = 1.0 + c - zeta_target
    if b <= 0:
        return 0.0
    disc = s * s - a * b
    if disc < 0 or s == 0:
        return math.inf
    y = b / (s + math.sqrt(disc))
    return y * y if y <= 1.0 else math.inf


# -- resource splitting and simulation --------------------------------------


def split_resource(resource: GaussianState, tau: float, side: str = "sender") -> GaussianState:
    """Mix one half of a two-mode resource with vacuum.

    The resource is ordered ``(B, A)``. The result is ordered
    ``(partner, transmitted, reflected)``: ``(B, A_T, A_R)`` when the sender
    splits, ``(A, B_T, B_R)`` when the receiver does.
    """
    if resource.n_modes != 2:
        raise ValueError("resource must be a two-mode state")
    if side not in ("sender", "receiver"):
        raise ValueError(f"side must be 'sender' or 'receiver', got {side!r}")
    joint = tensor(resource, vacuum(1))
    if side == "sender":
        return apply(beam_splitter(tau, 3, 1, 2), joint)
    out = apply(beam_splitter(tau, 3, 0, 2), joint)
    return partial_trace(out, [1, 0, 2])


def round_resource(r: float, taus: Sequence[float], n: Optional[int] = None) -> GaussianState:
    """Two-mode state ``(B, A_T)`` consumed by the round-``n`` Bell measurement."""
    taus = _check_taus(taus)
    n = len(taus) if n is None else int(n)
    if not 1 <= n <= len(taus):
        raise ValueError(f"round {n} outside schedule of length {len(taus)}")
    state = tmsv(_check_r(r))
    for tau in taus[: n - 1]:
        state = partial_trace(split_resource(state, tau), [0, 2])
    return partial_trace(split_resource(state, taus[n - 1]), [0, 1])


def _bell_setup(r, taus, n, x, p):
    # modes: 0 = Bob, 1 = A_T, 2 = input; Bell readout (x_in - x_AT, p_in + p_AT)
    state = tensor(round_resource(r, taus, n), coherent(x, p))
    return meas.conditioner(state, meas.double_homodyne(2, 1))


def _coherent_overlaps(cov: np.ndarray, means: np.ndarray, target: np.ndarray) -> np.ndarray:
    V = cov + np.eye(2)
    d = means - target
    q = np.einsum("ij,jk,ik->i", d, np.linalg.inv(V), d)
    return 2.0 / np.sqrt(np.linalg.det(V)) * np.exp(-q)


@dataclass(frozen=True)
class SimulationResult:
    mean: float
    stderr: float
    n_samples: int
    seed: int


def simulate_round(
    r: float,
    taus: Sequence[float],
    n: Optional[int] = None,
    x: float = 0.0,
    p: float = 0.0,
    samples: int = 100_000,
    seed: int = 0,
    workers: int = 1,
    chunk_size: int = 16_384,
) -> SimulationResult:
    """Monte-Carlo teleportation fidelity for round ``n``.

    Draws Bell outcomes, conditions Bob's mode, displaces it by the outcome
    and averages the overlap with the input. The draws are cut into chunks
    of fixed size, each with its own child stream of ``seed``, so the result
    does not depend on ``workers``.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    c = _bell_setup(r, taus, n, x, p)
    target = np.array([x, p], dtype=float)
    sizes = [chunk_size] * (samples // chunk_size)
    if samples % chunk_size:
        sizes.append(samples % chunk_size)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))

    def run(i):
        rng = np.random.default_rng(streams[i])
        y = meas._draw(rng, c.outcome_mean, c.outcome_cov, sizes[i])
        bob = c.mean_given(y) + y
        f = _coherent_overlaps(c.cond_cov, bob, target)
        return math.fsum(f), math.fsum(f * f)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(i) for i in range(len(sizes))]
    total = math.fsum(s for s, _ in parts)
    total_sq = math.fsum(q for _, q in parts)
    mean = total / samples
    if samples > 1:
        var = max(total_sq - samples * mean * mean, 0.0) / (samples - 1)
        stderr = math.sqrt(var / samples)
    else:
        stderr = math.inf
    return SimulationResult(mean, stderr, samples, int(seed))


def analytic_average_fidelity(r: float, taus: Sequence[float], n: Optional[int] = None) -> float:
    """Outcome-averaged fidelity by exact Gaussian integration over Bell outcomes.

    Runs the same state pipeline as :func:`simulate_round` but replaces
    sampling by ``E[exp(-d^T A d)]`` for Gaussian ``d``.
    """
    target = np.zeros(2)
    c = _bell_setup(r, taus, n, *target)
    V = c.cond_cov + np.eye(2)
    A = np.linalg.inv(V)
    # Bob's displaced mean minus the input mean is affine in the outcome
    B = c.gain + np.eye(2)
    a = c.cond_mean + c.outcome_mean - target
    C = B @ c.outcome_cov @ B.T
    M = np.eye(2) + 2.0 * C @ A
    expect = np.exp(-a @ A @ np.linalg.solve(M, a)) / np.sqrt(np.linalg.det(M))
    return float(2.0 / np.sqrt(np.linalg.det(V)) * expect)


# -- planners ----------------------------------------------------------------


def _solve_tau(r: float, prior_taus: Sequence[float], zeta_target: float) -> Union[float, Infeasible]:
    prior = _check_taus(prior_taus)
    reflected = 1.0
    for t in prior:
        reflected *= 1.0 - t
    if reflected <= 0:
        return Infeasible("earlier rounds transmitted the whole resource")

    def excess(tau):
        return float(zeta_from_transmitted(r, reflected * tau)) - zeta_target

    if excess(1.0) > 0:
        return Infeasible(f"target not reached even with tau = 1 (round {len(prior) + 1})")
    if excess(0.0) <= 0:
        return 0.0
    return float(optimize.bisect(excess, 0.0, 1.0, xtol=BISECTION_TOL))


def min_transmissivity(r: float, prior_taus: Sequence[float], target_F: float = 0.501) -> Union[float, Infeasible]:
    """Smallest ``tau_n`` giving round-``n`` fidelity ``target_F`` after ``prior_taus``."""
    r = _check_r(r)
    if not 0.5 < target_F < 1.0:
        raise ValueError(f"target fidelity must lie in (0.5, 1), got {target_F}")
    return _solve_tau(r, prior_taus, zeta_for_fidelity(target_F))


def nonclassical_threshold(r: float, prior_taus: Sequence[float] = ()) -> Union[float, Infeasible]:
    """Transmissivity at which the round's Duan quantity reaches 2."""
    r = _check_r(r)
    if r == 0:
        return Infeasible("no entanglement at r = 0")
    return _solve_tau(r, prior_taus, CLASSICAL_ZETA)


def min_transmissivity_schedule(r: float, target_F: float = 0.501, max_rounds: int = 10_000) -> list:
    """Greedy sequence of minimal transmissivities, stopping when infeasible."""
    taus = []
    while len(taus) < max_rounds:
        tau = min_transmissivity(r, taus, target_F)
        if isinstance(tau, Infeasible):
            break
        taus.append(tau)
        if tau >= 1.0:
            break
    return taus


@dataclass
class TeleportPlan:
    mode: str
    r: float
    n_max: int
    taus: list
    fidelities: list
    f_min: Optional[float] = None
    tau: Optional[float] = None
    r_opt: Optional[float] = None

    def to_dict(self) -> dict:
        d = {"mode": self.mode}
        if self.f_min is not None:
            d["F_min"] = self.f_min
        if self.tau is not None:
            d["tau"] = self.tau
        d.update(r=self.r, n_max=self.n_max, taus=list(self.taus), fidelities=list(self.fidelities))
        if self.r_opt is not None:
            d["r_opt"] = self.r_opt
        return d


def equal_fidelity_max_rounds(F_min: float) -> int:
    """``floor(F / (2F - 1))``, with ``F`` read as the decimal it prints as."""
    F = Fraction(repr(float(F_min)))
    return math.floor(F / (2 * F - 1))


def optimal_squeezing(F_min: float) -> float:
    """Squeezing maximising the number of equal-fidelity rounds."""
    a, b = math.sqrt(F_min), math.sqrt(2 * F_min - 1)
    return 0.5 * math.log((a + b) / (a - b))


def equal_fidelity_taus(n: int) -> list:
    """Exact schedule ``tau_1 = 1/n``, ``tau_i = tau_{i-1} / (1 - tau_{i-1})``."""
    if n < 1:
        raise ValueError("need at least one round")
    taus = [Fraction(1, n)]
    for _ in range(n - 1):
        prev = taus[-1]
        taus.append(prev / (1 - prev))
    return taus


def equal_fidelity_fidelity(n: int, r: float) -> float:
    """Common per-round fidelity ``2n / (3n - 1 + (1 + n) cosh 2r - 2 sqrt(n) sinh 2r)``."""
    c, s = math.cosh(2 * r), math.sinh(2 * r)
    return 2 * n / (3 * n - 1 + (1 + n) * c - 2 * math.sqrt(n) * s)


def equal_fidelity_plan(F_min: float) -> TeleportPlan:
    if not 0.5 < F_min < 1.0:
        raise ValueError(f"F_min must lie in (0.5, 1), got {F_min}")
    n = equal_fidelity_max_rounds(F_min)
    r_opt = optimal_squeezing(F_min)
    taus = [float(t) for t in equal_fidelity_taus(n)]
    fids = [fidelity_closed(r_opt, taus, k) for k in range(1, n + 1)]
    return TeleportPlan("equal-fidelity", r_opt, n, taus, fids, f_min=float(F_min), r_opt=r_opt)


def equal_fidelity_rounds(r: float, F_min: float) -> int:
    """Most rounds with every fidelity at least ``F_min`` at fixed squeezing ``r``.

    With equal fidelities every round receives ``tau_t = 1/n``.
    """
    r = _check_r(r)
    t_star = transmitted_threshold(r, zeta_for_fidelity(F_min))
    if not math.isfinite(t_star):
        return 0
    n = max(int(1.0 / t_star), 1)

    def ok(k):
        return k >= 1 and fidelity_from_transmitted(r, 1.0 / k) >= F_min

    while n > 0 and not ok(n):
        n -= 1
    while ok(n + 1):
        n += 1
    return n


def equal_transmissivity_max_rounds(r: float, tau: float, min_fidelity: Optional[float] = None) -> int:
    """Consecutive rounds with quantum fidelity when every round uses ``tau``.

    By default a round counts when its fidelity exceeds 1/2; with
    ``min_fidelity`` it must reach that value. Later rounds receive less of
    the resource, so counting stops at the first failure.
    """
    r = _check_r(r)
    tau = _check_taus([tau])[0]

    def ok(k):
        t = (1.0 - tau) ** (k - 1) * tau
        if min_fidelity is None:
            return fidelity_from_transmitted(r, t) > CLASSICAL_FIDELITY
        return fidelity_from_transmitted(r, t) >= min_fidelity

    if tau == 0.0 or not ok(1):
        return 0
    if tau == 1.0:
        return 1
    zeta_t = CLASSICAL_ZETA if min_fidelity is None else zeta_for_fidelity(min_fidelity)
    t_star = transmitted_threshold(r, zeta_t)
    if t_star > 0:
        n = 1 + int(math.log(t_star / tau) / math.log(1.0 - tau))
    else:
        n = 1
    n = max(n, 1)
    while n > 1 and not ok(n):
        n -= 1
    while ok(n + 1):
        n += 1
    return n


def equal_transmissivity_plan(r: float, tau: float) -> TeleportPlan:
    n = equal_transmissivity_max_rounds(r, tau)
    taus = [float(tau)] * n
    fids = [fidelity_closed(r, taus, k) for k in range(1, n + 1)]
    return TeleportPlan("equal-transmissivity", float(r), n, taus, fids, tau=float(tau))
