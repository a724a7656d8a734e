"""Gaussian measurements: conditioning, outcome sampling, feed-forward.

A measurement is described by :class:`GeneralDyneSpec`. Its readout
variables are ``z = F r_M`` where ``r_M`` are the quadratures of the
measured modes and ``F`` an optional frame (identity by default). Each
consecutive pair ``(z_2i, z_2i+1)`` is either read with finite Gaussian
noise (general-dyne) or, when a homodyne flag is set, one member is read
sharply and its partner is discarded. Sharp readouts are handled exactly;
no large-number surrogate for the infinitely noisy conjugate is used.

Outcomes are distributed as ``N(L m, (L V L^T + noise) / 2)`` where ``L``
collects the retained readout rows (see :mod:`cvseq.gaussian` for the
factor 1/2).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from .gaussian import (
    GaussianState,
    SymplecticTransform,
    _check_mode,
    mode_indices,
    quadrature_variance,
    squeezed_ancilla,
    tensor,
)


class SingularMeasurementError(np.linalg.LinAlgError):
    """The readout covariance ``L V L^T + noise`` is not invertible."""

    def __init__(self, matrix: np.ndarray):
        self.matrix = np.array(matrix)
        super().__init__(f"singular conditioning matrix:\n{self.matrix}")


@dataclass(frozen=True)
class GeneralDyneSpec:
    modes: tuple
    noise_cov: Optional[np.ndarray] = None
    homodyne: Optional[tuple] = None
    frame: Optional[np.ndarray] = None

    def __post_init__(self):
        modes = tuple(int(m) for m in self.modes)
        if not modes:
            raise ValueError("a measurement needs at least one mode")
        if len(set(modes)) != len(modes):
            raise ValueError(f"measured modes must be distinct, got {modes}")
        object.__setattr__(self, "modes", modes)
        dim = 2 * len(modes)
        noise = np.zeros((dim, dim)) if self.noise_cov is None else np.array(self.noise_cov, dtype=float)
        if noise.shape != (dim, dim):
            raise ValueError(f"noise_cov must be {dim}x{dim}, got {noise.shape}")
        if not np.allclose(noise, noise.T, atol=1e-12):
            raise ValueError("noise_cov must be symmetric")
        object.__setattr__(self, "noise_cov", 0.5 * (noise + noise.T))
        flags = (None,) * len(modes) if self.homodyne is None else tuple(self.homodyne)
        if len(flags) != len(modes) or any(f not in (None, "x", "p") for f in flags):
            raise ValueError(f"homodyne flags must be one of None/'x'/'p' per mode, got {flags}")
        object.__setattr__(self, "homodyne", flags)
        frame = np.eye(dim) if self.frame is None else np.array(self.frame, dtype=float)
        if frame.shape != (dim, dim):
            raise ValueError(f"frame must be {dim}x{dim}, got {frame.shape}")
        object.__setattr__(self, "frame", frame)

    @property
    def n_outcomes(self) -> int:
        return sum(1 if f else 2 for f in self.homodyne)

    def readout(self, n_modes: int):
        """Return ``(L, noise)``: retained readout rows over all ``2n`` quadratures."""
        for m in self.modes:
            _check_mode(m, n_modes)
        keep, sharp = [], []
        for i, flag in enumerate(self.homodyne):
            if flag is None:
                keep += [2 * i, 2 * i + 1]
                sharp += [False, False]
            else:
                keep.append(2 * i if flag == "x" else 2 * i + 1)
                sharp.append(True)
        local = self.frame[keep]
        L = np.zeros((len(keep), 2 * n_modes))
        L[:, mode_indices(self.modes)] = local
        noise = self.noise_cov[np.ix_(keep, keep)].copy()
        sharp = np.array(sharp)
        noise[sharp, :] = 0.0
        noise[:, sharp] = 0.0
        return L, noise


def homodyne(mode: int, quadrature: str = "x") -> GeneralDyneSpec:
    return GeneralDyneSpec((mode,), homodyne=(quadrature,))


def heterodyne(mode: int) -> GeneralDyneSpec:
    return GeneralDyneSpec((mode,), noise_cov=np.eye(2))


def double_homodyne(mode_a: int, mode_b: int) -> GeneralDyneSpec:
    """Bell measurement of ``x_a - x_b`` and ``p_a + p_b``, in that order.

    These are the directions left finite by the EPR covariance
    ``cc [[I, Z], [Z, I]]`` as ``cc`` grows; the orthogonal pair
    ``(p_a - p_b, x_a + x_b)`` is discarded.
    """
    frame = np.array(
        [
            [1.0, 0.0, -1.0, 0.0],  # x_a - x_b  (kept, pair 0 'x')
            [0.0, 1.0, 0.0, -1.0],  # p_a - p_b
            [1.0, 0.0, 1.0, 0.0],  # x_a + x_b
            [0.0, 1.0, 0.0, 1.0],  # p_a + p_b  (kept, pair 1 'p')
        ]
    )
    return GeneralDyneSpec((mode_a, mode_b), homodyne=("x", "p"), frame=frame)


def epr_general_dyne(mode_a: int, mode_b: int, cc: float) -> GeneralDyneSpec:
    """Finite-``cc`` general-dyne with noise ``cc [[I, Z], [Z, I]]``.

    Only used as an oracle for :func:`double_homodyne`: feeding the outcome
    ``(y1, y2, 0, 0)`` reproduces the Bell outcome ``(y1, y2)`` as ``cc``
    grows.
    """
    Z = np.diag([1.0, -1.0])
    I = np.eye(2)
    return GeneralDyneSpec((mode_a, mode_b), noise_cov=cc * np.block([[I, Z], [Z, I]]))


@dataclass(frozen=True)
class MeasurementOutcome:
    values: np.ndarray
    log_density: float


@dataclass(frozen=True)
class _Conditioner:
    """Outcome-independent pieces of a Gaussian conditional update."""

    remaining: list
    outcome_mean: np.ndarray
    outcome_cov: np.ndarray  # physical covariance of the outcome
    gain: np.ndarray
    cond_mean: np.ndarray
    cond_cov: np.ndarray
    chol: tuple = field(repr=False)
    physical: bool = True

    def log_density(self, y) -> np.ndarray:
        d = np.atleast_2d(np.asarray(y, dtype=float)) - self.outcome_mean
        k = self.outcome_mean.shape[0]
        # outcome_cov = S / 2 with S = L V L^T + noise
        sol = linalg.cho_solve(self.chol, d.T)
        quad = np.einsum("ij,ji->i", d, sol)
        logdet_S = 2.0 * np.sum(np.log(np.diag(self.chol[0])))
        return -quad - 0.5 * logdet_S - 0.5 * k * np.log(np.pi)

    def mean_given(self, y) -> np.ndarray:
        d = np.atleast_2d(np.asarray(y, dtype=float)) - self.outcome_mean
        return self.cond_mean + d @ self.gain.T

    def state_given(self, y) -> GaussianState:
        return GaussianState(self.mean_given(y)[0], self.cond_cov, check_physical=self.physical)


def conditioner(state: GaussianState, spec: GeneralDyneSpec) -> _Conditioner:
    L, noise = spec.readout(state.n_modes)
    S = L @ state.cov @ L.T + noise
    S = 0.5 * (S + S.T)
    try:
        chol = linalg.cho_factor(S, lower=True)
    except linalg.LinAlgError:
        raise SingularMeasurementError(S) from None
    if np.min(np.diag(chol[0])) ** 2 <= 1e-14 * np.max(np.abs(S)):
        raise SingularMeasurementError(S)
    remaining = [m for m in range(state.n_modes) if m not in spec.modes]
    ridx = mode_indices(remaining) if remaining else np.array([], dtype=int)
    cross = state.cov[ridx] @ L.T
    gain = linalg.cho_solve(chol, cross.T).T
    cond_cov = state.cov[np.ix_(ridx, ridx)] - gain @ cross.T
    return _Conditioner(
        remaining=remaining,
        outcome_mean=L @ state.mean,
        outcome_cov=0.5 * S,
        gain=gain,
        cond_mean=state.mean[ridx],
        cond_cov=0.5 * (cond_cov + cond_cov.T),
        chol=chol,
        physical=state.physical,
    )


def condition(state: GaussianState, spec: GeneralDyneSpec, outcome):
    """Post-measurement state of the unmeasured modes and the outcome log-density.

    Unmeasured modes keep their relative order.
    """
    outcome = np.asarray(outcome, dtype=float).reshape(-1)
    c = conditioner(state, spec)
    if outcome.shape[0] != c.outcome_mean.shape[0]:
        raise ValueError(
            f"outcome has {outcome.shape[0]} entries, measurement yields {c.outcome_mean.shape[0]}"
        )
    if not c.remaining:
        raise ValueError("measurement consumes every mode; nothing left to condition")
    return c.state_given(outcome), float(c.log_density(outcome)[0])


def outcome_distribution(state: GaussianState, spec: GeneralDyneSpec):
    """Mean and (physical) covariance of the measurement record."""
    L, noise = spec.readout(state.n_modes)
    return L @ state.mean, 0.5 * (L @ state.cov @ L.T + noise)


def _draw(rng: np.random.Generator, mean: np.ndarray, cov: np.ndarray, size: int) -> np.ndarray:
    # eigh tolerates the rank-deficient covariances of sharp readouts
    w, U = np.linalg.eigh(cov)
    A = U * np.sqrt(np.clip(w, 0.0, None))
    return mean + rng.standard_normal((size, mean.shape[0])) @ A.T


def sample_outcomes(state: GaussianState, spec: GeneralDyneSpec, rng: np.random.Generator, size: int):
    """``size`` outcome draws and their log-densities."""
    c = conditioner(state, spec)
    y = _draw(rng, c.outcome_mean, c.outcome_cov, size)
    return y, c.log_density(y)


def sample_outcome(state: GaussianState, spec: GeneralDyneSpec, rng: np.random.Generator) -> MeasurementOutcome:
    y, logp = sample_outcomes(state, spec, rng, 1)
    return MeasurementOutcome(y[0], float(logp[0]))


def displace(state: GaussianState, mode: int, dx: float, dp: float) -> GaussianState:
    mode = _check_mode(mode, state.n_modes)
    mean = state.mean.copy()
    mean[2 * mode] += dx
    mean[2 * mode + 1] += dp
    return GaussianState(mean, state.cov, check_physical=state.physical)


def overlap(a: GaussianState, b: GaussianState) -> float:
    """``Tr[rho_a rho_b]`` for single-mode Gaussian states."""
    if a.n_modes != 1 or b.n_modes != 1:
        raise ValueError("overlap is defined here for single-mode states")
    V = a.cov + b.cov
    d = a.mean - b.mean
    return float(2.0 / np.sqrt(np.linalg.det(V)) * np.exp(-d @ np.linalg.solve(V, d)))


def overlap_with_coherent(state: GaussianState, target: GaussianState) -> float:
    if target.n_modes != 1 or not np.allclose(target.cov, np.eye(2), atol=1e-12):
        raise ValueError("target must be a coherent state (identity covariance)")
    return overlap(state, target)


# -- unsharp quadrature measurement ------------------------------------------

# Acting on (x_sys, p_sys, x_anc, p_anc).
X_COUPLING = np.array(
    [
        [1, 0, 0, 0],
        [0, 1, 0, -1],
        [1, 0, 1, 0],
        [0, 0, 0, 1],
    ],
    dtype=float,
)
P_COUPLING = np.array(
    [
        [1, 0, 0, 1],
        [0, 1, 0, 0],
        [0, 1, 1, 0],
        [0, 0, 0, 1],
    ],
    dtype=float,
)


def coupling_transform(quadrature: str, n_modes: int, mode: int, ancilla_mode: int) -> SymplecticTransform:
    if quadrature not in ("x", "p"):
        raise ValueError(f"quadrature must be 'x' or 'p', got {quadrature!r}")
    local = X_COUPLING if quadrature == "x" else P_COUPLING
    return SymplecticTransform.embed(local, n_modes, [mode, ancilla_mode])


def unsharp_couple(state: GaussianState, mode: int, quadrature: str, ancilla: GaussianState) -> GaussianState:
    """Append ``ancilla`` as the last mode and kick its ``x`` by the system quadrature.

    ``quadrature='x'`` copies ``x_sys`` onto the ancilla and feeds ``-p_anc``
    back into ``p_sys``; ``'p'`` copies ``p_sys`` and feeds ``p_anc`` into
    ``x_sys``. A homodyne of the ancilla ``x`` then reads the chosen system
    quadrature with added noise ``ancilla.cov[0, 0]``.
    """
    if ancilla.n_modes != 1:
        raise ValueError("ancilla must be a single mode")
    mode = _check_mode(mode, state.n_modes)
    joint = tensor(state, ancilla)
    S = coupling_transform(quadrature, joint.n_modes, mode, joint.n_modes - 1)
    M = S.matrix
    return GaussianState(M @ joint.mean, M @ joint.cov @ M.T, check_physical=joint.physical)


def unsharp_readout_variance(state: GaussianState, a, b, sign: int = -1, u: float = 0.25) -> float:
    """Variance of ``x_anc,a + sign * x_anc,b`` after coupling both ancillas.

    ``a`` and ``b`` are ``(mode, quadrature, omega_sq)`` triples.
    """
    (ma, qa, wa), (mb, qb, wb) = a, b
    if ma == mb:
        raise ValueError("the two readouts must act on distinct modes")
    if sign not in (-1, 1):
        raise ValueError("sign must be +1 or -1")
    coupled = unsharp_couple(state, ma, qa, squeezed_ancilla(wa, u))
    coupled = unsharp_couple(coupled, mb, qb, squeezed_ancilla(wb, u))
    n = coupled.n_modes
    v = np.zeros(2 * n)
    v[2 * (n - 2)] = 1.0
    v[2 * (n - 1)] = float(sign)
    return quadrature_variance(coupled.cov, v)
