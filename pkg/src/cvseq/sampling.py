"""Finite-sample estimation of the Duan quantity and its error scaling."""

from __future__ import annotations

import functools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .entanglement import MixtureState
from .gaussian import GaussianState, squeezed_ancilla, tmsv
from .measurement import _draw, unsharp_couple

MAX_SAMPLES = 2**62


@dataclass(frozen=True)
class EstimatorResult:
    estimate: float
    stderr: float
    n_samples: int
    seed: int


def streams(seed, n: int) -> list:
    """``n`` independent generators derived from ``seed`` by stream index."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in ss.spawn(n)]


def _readout_pair(state: GaussianState, quadrature: str, omega_sq, u: float):
    """Mean and covariance of the two numbers the observers record."""
    if omega_sq is None:
        q = 0 if quadrature == "x" else 1
        idx = [q, 2 + q]
        return state.mean[idx], 0.5 * state.cov[np.ix_(idx, idx)]
    wa, wb = omega_sq
    coupled = unsharp_couple(state, 0, quadrature, squeezed_ancilla(wa, u))
    coupled = unsharp_couple(coupled, 1, quadrature, squeezed_ancilla(wb, u))
    idx = [4, 6]
    return coupled.mean[idx], 0.5 * coupled.cov[np.ix_(idx, idx)]


def sample_readouts(state, quadrature: str, size: int, rng: np.random.Generator, omega_sq=None, u: float = 0.25) -> np.ndarray:
    """``size`` joint readouts ``(a, b)`` of the chosen quadrature on modes 0 and 1.

    Sharp homodyne when ``omega_sq`` is None, otherwise through meters with
    unsharpness ``omega_sq = (w_A, w_B)``. Mixtures are sampled by first
    drawing the component.
    """
    if isinstance(state, GaussianState):
        state = MixtureState.pure(state)
    weights = np.array([w for w, _ in state.components])
    if len(state) == 1:
        counts = np.array([size])
    else:
        counts = rng.multinomial(size, weights / weights.sum())
    out = np.empty((size, 2))
    pos = 0
    for (_, comp), k in zip(state.components, counts):
        if k:
            mean, cov = _readout_pair(comp, quadrature, omega_sq, u)
            out[pos : pos + k] = _draw(rng, mean, cov, int(k))
            pos += k
    return out


def _jackknife_variance_sum(d: np.ndarray, s: np.ndarray) -> float:
    """Delete-1 jackknife error of ``var(d) + var(s)`` with paired deletion."""
    n = d.shape[0]
    if n < 3:
        return math.nan

    def loo(v):
        s1, s2 = v.sum(), (v * v).sum()
        return ((s2 - v * v) - (s1 - v) ** 2 / (n - 1)) / (n - 2)

    theta = loo(d) + loo(s)
    return float(math.sqrt((n - 1) / n * np.sum((theta - theta.mean()) ** 2)))


def estimate_zeta(
    state: Union[GaussianState, MixtureState],
    omega_sq: Optional[tuple] = None,
    n_samples: int = 10_000,
    seed=0,
    u: float = 0.25,
) -> EstimatorResult:
    """Sample estimate of ``Var(a_x - b_x) + Var(a_p + b_p)``.

    ``n_samples`` copies are spent on the ``x`` readout and another
    ``n_samples`` on the ``p`` readout. Variances use the ``N - 1``
    denominator; the error is a jackknife over copy pairs.
    """
    if n_samples < 2:
        raise ValueError("need at least two samples per readout")
    rng_x, rng_p = streams(seed, 2)
    rx = sample_readouts(state, "x", n_samples, rng_x, omega_sq, u)
    rp = sample_readouts(state, "p", n_samples, rng_p, omega_sq, u)
    d = rx[:, 0] - rx[:, 1]
    s = rp[:, 0] + rp[:, 1]
    est = float(np.var(d, ddof=1) + np.var(s, ddof=1))
    return EstimatorResult(est, _jackknife_variance_sum(d, s), int(n_samples), _seed_int(seed))


def _seed_int(seed) -> int:
    if isinstance(seed, np.random.SeedSequence):
        return int(seed.entropy)
    return int(seed)


@functools.lru_cache(maxsize=None)
def calibrate_c0(r: float = 0.8, n_samples: int = 100_000, seed: int = 0) -> float:
    """``stderr * sqrt(N)`` of the sharp estimator on a squeezed vacuum."""
    res = estimate_zeta(tmsv(r), None, n_samples, seed)
    return res.stderr * math.sqrt(n_samples)


def required_samples(zeta: float, confidence_k: float = 1.0, c0: Optional[float] = None) -> int:
    """Copies needed for ``k`` standard errors to fit between ``zeta`` and 2.

    ``N = ceil((k c0 / (2 - zeta))^2)``; ``c0`` defaults to
    :func:`calibrate_c0`. Results above ``MAX_SAMPLES`` are capped with a
    warning.
    """
    if not 0.0 <= zeta < 2.0:
        raise ValueError(f"zeta must lie in [0, 2), got {zeta}")
    if c0 is None:
        c0 = calibrate_c0()
    n = (confidence_k * c0 / (2.0 - zeta)) ** 2
    if not n < MAX_SAMPLES:
        warnings.warn(f"required sample count {n:.3g} capped at {MAX_SAMPLES}", RuntimeWarning)
        return MAX_SAMPLES
    return max(math.ceil(n), 1)


@dataclass
class ScalingResult:
    slope: float
    intercept: float
    c0: float
    n_values: list
    mean_zeta: list
    std_zeta: list
    stderr: list
    trials: int
    seed: int

    def rows(self):
        return list(zip(self.n_values, self.mean_zeta, self.std_zeta, self.stderr))

    def summary(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "c0": self.c0,
                "trials": self.trials, "seed": self.seed, "N": list(self.n_values)}


def error_scaling_experiment(
    r: float,
    n_list: Sequence[int],
    trials: int = 100,
    seed: int = 0,
    omega_sq: Optional[tuple] = None,
    workers: int = 1,
) -> ScalingResult:
    """Spread of repeated estimates versus sample size, with a log-log fit.

    Every (N, trial) pair draws from its own child stream, so results do
    not depend on ``workers``.
    """
    n_list = [int(n) for n in n_list]
    if len(set(n_list)) < 3:
        raise ValueError("need at least three distinct sample sizes")
    if trials < 30:
        raise ValueError("need at least 30 trials per sample size")
    state = tmsv(r)
    seeds = np.random.SeedSequence(seed).spawn(len(n_list) * trials)
    jobs = [(n, seeds[i * trials + t]) for i, n in enumerate(n_list) for t in range(trials)]

    def run(job):
        n, ss = job
        return estimate_zeta(state, omega_sq, n, ss).estimate

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            est = list(pool.map(run, jobs))
    else:
        est = [run(j) for j in jobs]
    est = np.array(est).reshape(len(n_list), trials)
    means = est.mean(axis=1)
    stds = est.std(axis=1, ddof=1)
    slope, intercept = np.polyfit(np.log(n_list), np.log(stds), 1)
    c0 = float(np.mean(stds * np.sqrt(n_list)))
    return ScalingResult(
        float(slope), float(intercept), c0, n_list, means.tolist(), stds.tolist(),
        (stds / math.sqrt(trials)).tolist(), int(trials), int(seed),
    )
