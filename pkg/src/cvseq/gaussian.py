"""Gaussian states and symplectic phase-space maps.

Conventions
-----------
Quadratures are ordered ``(x1, p1, x2, p2, ...)``. Covariance matrices use
the vacuum-equals-identity normalisation, so the Wigner function of a state
with mean ``m`` and covariance ``V`` is

    W(r) = exp(-(r - m)^T V^{-1} (r - m)) / (pi^n sqrt(det V)).

The physical variance of a linear combination ``v . r`` is therefore
``v^T V v / 2``. Everything that reports a variance (the Duan-type
quantity ``zeta``, homodyne readouts, sampled outcomes) uses that physical
variance.
"""

from __future__ import annotations

import json
from typing import Sequence

import numpy as np

SYMMETRY_TOL = 1e-12
PHYSICALITY_TOL = 1e-9
SYMPLECTIC_TOL = 1e-12


def omega(n: int) -> np.ndarray:
    """Block-diagonal symplectic form for ``n`` modes."""
    return np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    """Symplectic spectrum of a covariance matrix, sorted ascending.

    Computed as the moduli of the eigenvalues of ``i * Omega @ cov``; each
    value appears once (the spectrum comes in +/- pairs).
    """
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0] // 2
    ev = np.linalg.eigvals(1j * omega(n) @ cov)
    return np.sort(np.abs(ev))[::2]


def _check_mode(mode: int, n_modes: int) -> int:
    if isinstance(mode, bool) or not isinstance(mode, (int, np.integer)):
        raise TypeError(f"mode index must be an integer, got {mode!r}")
    if not 0 <= mode < n_modes:
        raise IndexError(f"mode {mode} out of range for {n_modes}-mode state")
    return int(mode)


def mode_indices(modes: Sequence[int]) -> np.ndarray:
    """Quadrature indices ``(2k, 2k+1)`` for each mode ``k`` in order."""
    return np.array([[2 * m, 2 * m + 1] for m in modes], dtype=int).reshape(-1)


class GaussianState:
    """An ``n``-mode Gaussian state given by its mean vector and covariance.

    Instances are immutable: the arrays are copied, symmetrised and marked
    read-only on construction.

    Parameters
    ----------
    mean : array_like, shape (2n,)
    cov : array_like, shape (2n, 2n)
    check_physical : bool
        Verify that every symplectic eigenvalue is at least
        ``1 - PHYSICALITY_TOL``. Disable for deliberately sub-Heisenberg
        ancillas (see :func:`squeezed_ancilla`).
    """

    __slots__ = ("_mean", "_cov", "physical")

    def __init__(self, mean, cov, check_physical: bool = True):
        mean = np.array(mean, dtype=float).reshape(-1)
        cov = np.array(cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise ValueError(f"covariance must be square, got shape {cov.shape}")
        if cov.shape[0] % 2 or cov.shape[0] == 0:
            raise ValueError("covariance dimension must be a positive even number")
        if mean.shape[0] != cov.shape[0]:
            raise ValueError(
                f"mean has length {mean.shape[0]}, covariance is {cov.shape[0]}x{cov.shape[0]}"
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("mean and covariance must be finite")
        cov = 0.5 * (cov + cov.T)
        if check_physical:
            nu = symplectic_eigenvalues(cov)
            if nu.min() < 1.0 - PHYSICALITY_TOL:
                raise ValueError(
                    f"unphysical covariance: smallest symplectic eigenvalue {nu.min():.3e} < 1"
                )
        mean.setflags(write=False)
        cov.setflags(write=False)
        self._mean = mean
        self._cov = cov
        self.physical = bool(check_physical)

    @property
    def mean(self) -> np.ndarray:
        return self._mean

    @property
    def cov(self) -> np.ndarray:
        return self._cov

    @property
    def n_modes(self) -> int:
        return self._cov.shape[0] // 2

    def symplectic_eigenvalues(self) -> np.ndarray:
        return symplectic_eigenvalues(self._cov)

    def is_physical(self, tol: float = PHYSICALITY_TOL) -> bool:
        return bool(self.symplectic_eigenvalues().min() >= 1.0 - tol)

    def allclose(self, other: "GaussianState", atol: float = 1e-12) -> bool:
        return (
            self.n_modes == other.n_modes
            and np.allclose(self.mean, other.mean, rtol=0, atol=atol)
            and np.allclose(self.cov, other.cov, rtol=0, atol=atol)
        )

    def to_json(self) -> str:
        """Debug dump with fields ``n_modes``, ``mean`` and row-major ``cov``."""
        return json.dumps(
            {
                "n_modes": self.n_modes,
                "mean": self.mean.tolist(),
                "cov": self.cov.reshape(-1).tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "GaussianState":
        data = json.loads(text)
        n = int(data["n_modes"])
        return cls(data["mean"], np.reshape(data["cov"], (2 * n, 2 * n)))

    def __repr__(self) -> str:
        return f"GaussianState(n_modes={self.n_modes}, mean={self.mean.tolist()})"


class SymplecticTransform:
    """Linear phase-space map ``S`` with ``S Omega S^T = Omega``."""

    __slots__ = ("_matrix",)

    def __init__(self, matrix):
        matrix = np.array(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] % 2:
            raise ValueError(f"symplectic matrix must be 2n x 2n, got {matrix.shape}")
        n = matrix.shape[0] // 2
        err = np.max(np.abs(matrix @ omega(n) @ matrix.T - omega(n)))
        if err > SYMPLECTIC_TOL:
            raise ValueError(f"matrix is not symplectic (max deviation {err:.3e})")
        matrix.setflags(write=False)
        self._matrix = matrix

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def n_modes(self) -> int:
        return self._matrix.shape[0] // 2

    @classmethod
    def identity(cls, n_modes: int) -> "SymplecticTransform":
        return cls(np.eye(2 * n_modes))

    @classmethod
    def embed(cls, local, n_modes: int, modes: Sequence[int]) -> "SymplecticTransform":
        """Embed a ``2k x 2k`` map acting on ``modes`` into ``n_modes`` modes."""
        local = np.asarray(local, dtype=float)
        modes = [_check_mode(m, n_modes) for m in modes]
        if len(set(modes)) != len(modes):
            raise ValueError(f"mode indices must be distinct, got {modes}")
        if local.shape != (2 * len(modes), 2 * len(modes)):
            raise ValueError("local matrix size does not match the number of modes")
        idx = mode_indices(modes)
        full = np.eye(2 * n_modes)
        full[np.ix_(idx, idx)] = local
        return cls(full)

    def __matmul__(self, other: "SymplecticTransform") -> "SymplecticTransform":
        return SymplecticTransform(self.matrix @ other.matrix)


# -- states -----------------------------------------------------------------


def vacuum(n: int) -> GaussianState:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"number of modes must be a positive integer, got {n!r}")
    return GaussianState(np.zeros(2 * n), np.eye(2 * n))


def tmsv(r: float) -> GaussianState:
    """Two-mode squeezed vacuum with squeezing strength ``r``.

    Positively correlated ``x`` quadratures, anticorrelated ``p``.
    """
    if not np.isfinite(r) or r < 0:
        raise ValueError(f"squeezing strength must be finite and non-negative, got {r}")
    c, s = np.cosh(2 * r), np.sinh(2 * r)
    cov = np.array(
        [
            [c, 0, s, 0],
            [0, c, 0, -s],
            [s, 0, c, 0],
            [0, -s, 0, c],
        ]
    )
    return GaussianState(np.zeros(4), cov)


def coherent(x: float, p: float) -> GaussianState:
    if not (np.isfinite(x) and np.isfinite(p)):
        raise ValueError("coherent amplitude must be finite")
    return GaussianState([x, p], np.eye(2))


def squeezed_ancilla(omega_sq: float, u: float = 0.25) -> GaussianState:
    """Single-mode meter state with covariance ``diag(omega_sq, u / omega_sq)``.

    With the default ``u = 1/4`` the product of the two covariance entries
    sits below the vacuum bound of this normalisation, so no physicality
    check is made unless ``u >= 1``.
    """
    if not np.isfinite(omega_sq) or omega_sq <= 0:
        raise ValueError(f"omega_sq must be positive and finite, got {omega_sq}")
    if not np.isfinite(u) or u <= 0:
        raise ValueError(f"uncertainty product u must be positive, got {u}")
    return GaussianState(
        np.zeros(2), np.diag([omega_sq, u / omega_sq]), check_physical=u >= 1.0
    )


# -- maps -------------------------------------------------------------------


def beam_splitter(tau: float, n_modes: int = 2, mode_a: int = 0, mode_b: int = 1) -> SymplecticTransform:
    """Beam splitter of transmissivity ``tau`` mixing ``mode_a`` with ``mode_b``.

    The local matrix is ``[[t, s], [s, -t]]`` on each quadrature, with
    ``t = sqrt(tau)`` and ``s = sqrt(1 - tau)``: ``mode_a`` leaves as the
    transmitted port, ``mode_b`` as the reflected port.
    """
    if not np.isfinite(tau) or not 0.0 <= tau <= 1.0:
        raise ValueError(f"transmissivity must lie in [0, 1], got {tau}")
    t, s = np.sqrt(tau), np.sqrt(1.0 - tau)
    local = np.kron(np.array([[t, s], [s, -t]]), np.eye(2))
    return SymplecticTransform.embed(local, n_modes, [mode_a, mode_b])


def apply(S: SymplecticTransform, state: GaussianState) -> GaussianState:
    if S.n_modes != state.n_modes:
        raise ValueError(
            f"transform acts on {S.n_modes} modes but state has {state.n_modes}"
        )
    M = S.matrix
    return GaussianState(M @ state.mean, M @ state.cov @ M.T, check_physical=state.physical)


def tensor(a: GaussianState, b: GaussianState) -> GaussianState:
    """Product state, modes of ``a`` first."""
    na, nb = 2 * a.n_modes, 2 * b.n_modes
    cov = np.zeros((na + nb, na + nb))
    cov[:na, :na] = a.cov
    cov[na:, na:] = b.cov
    return GaussianState(
        np.concatenate([a.mean, b.mean]), cov, check_physical=a.physical and b.physical
    )


def partial_trace(state: GaussianState, keep: Sequence[int]) -> GaussianState:
    """Reduced state on ``keep``, in the order listed."""
    keep = [_check_mode(m, state.n_modes) for m in keep]
    if not keep:
        raise ValueError("must keep at least one mode")
    if len(set(keep)) != len(keep):
        raise ValueError(f"mode indices must be distinct, got {keep}")
    idx = mode_indices(keep)
    return GaussianState(
        state.mean[idx], state.cov[np.ix_(idx, idx)], check_physical=state.physical
    )


def quadrature_variance(cov: np.ndarray, v: np.ndarray) -> float:
    """Physical variance of ``v . r`` for covariance ``cov``."""
    v = np.asarray(v, dtype=float)
    return 0.5 * float(v @ cov @ v)


def duan_zeta(state, mode_a: int = 0, mode_b: int = 1) -> float:
    """``Var(x_a - x_b) + Var(p_a + p_b)``; values below 2 witness entanglement.

    ``state`` may be a :class:`GaussianState` or a bare covariance matrix.
    """
    cov = state.cov if isinstance(state, GaussianState) else np.asarray(state, dtype=float)
    n = cov.shape[0] // 2
    a, b = _check_mode(mode_a, n), _check_mode(mode_b, n)
    if a == b:
        raise ValueError("duan_zeta needs two distinct modes")
    vx = np.zeros(2 * n)
    vp = np.zeros(2 * n)
    vx[2 * a], vx[2 * b] = 1.0, -1.0
    vp[2 * a + 1], vp[2 * b + 1] = 1.0, 1.0
    return quadrature_variance(cov, vx) + quadrature_variance(cov, vp)
