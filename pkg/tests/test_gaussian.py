import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvseq.gaussian import (
    GaussianState,
    SymplecticTransform,
    apply,
    beam_splitter,
    coherent,
    duan_zeta,
    omega,
    partial_trace,
    squeezed_ancilla,
    symplectic_eigenvalues,
    tensor,
    tmsv,
    vacuum,
)
from cvseq.measurement import P_COUPLING, X_COUPLING, displace


def random_symplectic(rng, n):
    """Product of random beam splitters and single-mode squeezers/rotations."""
    S = np.eye(2 * n)
    for _ in range(3 * n):
        a, b = rng.choice(n, 2, replace=False) if n > 1 else (0, None)
        if b is not None:
            S = beam_splitter(rng.uniform(), n, int(a), int(b)).matrix @ S
        m = rng.integers(n)
        th, s = rng.uniform(0, 2 * np.pi), rng.uniform(-0.8, 0.8)
        rot = np.array([[np.cos(th), np.sin(th)], [-np.sin(th), np.cos(th)]])
        sq = np.diag([np.exp(-s), np.exp(s)])
        S = SymplecticTransform.embed(rot @ sq, n, [int(m)]).matrix @ S
    return SymplecticTransform(S)


def random_state(rng, n):
    thermal = np.repeat(1.0 + rng.exponential(0.5, n), 2)
    base = GaussianState(rng.normal(size=2 * n), np.diag(thermal))
    return apply(random_symplectic(rng, n), base)


def test_vacuum():
    v = vacuum(1)
    assert np.array_equal(v.mean, [0, 0])
    assert np.array_equal(v.cov, np.eye(2))
    assert np.array_equal(vacuum(2).cov, np.eye(4))
    assert np.allclose(vacuum(3).symplectic_eigenvalues(), 1.0)
    with pytest.raises(ValueError):
        vacuum(0)


def test_tmsv_entries():
    assert np.allclose(tmsv(0).cov, np.eye(4))
    s = tmsv(0.8)
    assert np.allclose(np.diag(s.cov), math.cosh(1.6))
    assert s.cov[0, 0] == pytest.approx(2.577464, abs=1e-6)
    assert s.cov[0, 2] == pytest.approx(math.sinh(1.6))
    assert s.cov[1, 3] == pytest.approx(-math.sinh(1.6))
    for bad in (-0.1, math.inf, math.nan):
        with pytest.raises(ValueError):
            tmsv(bad)


@pytest.mark.parametrize("r", [0.3, 0.8, 1.5])
def test_tmsv_zeta(r):
    assert duan_zeta(tmsv(r)) == pytest.approx(2 * math.exp(-2 * r), abs=1e-12)


def test_tmsv_zeta_grid():
    for r in np.arange(0, 3.0001, 0.05):
        assert abs(duan_zeta(tmsv(r)) - 2 * math.exp(-2 * r)) <= 1e-12


def test_duan_values():
    assert duan_zeta(vacuum(2)) == pytest.approx(2.0)
    assert duan_zeta(tmsv(0.8)) == pytest.approx(0.403793, abs=1e-6)
    s = displace(displace(tmsv(0.5), 0, 1.3, -2.0), 1, 1.3, -2.0)
    assert duan_zeta(s) == pytest.approx(duan_zeta(tmsv(0.5)), abs=1e-14)
    with pytest.raises(ValueError):
        duan_zeta(tmsv(0.5), 0, 0)
    with pytest.raises(IndexError):
        duan_zeta(tmsv(0.5), 0, 2)


def test_coherent():
    assert coherent(0, 0).allclose(vacuum(1))
    c = coherent(1.5, -0.7)
    assert np.allclose(c.mean, [1.5, -0.7]) and np.allclose(c.cov, np.eye(2))
    with pytest.raises(ValueError):
        coherent(math.nan, 0)


def test_squeezed_ancilla():
    assert np.allclose(squeezed_ancilla(0.5, 0.25).cov, np.diag([0.5, 0.5]))
    assert squeezed_ancilla(1.0, 0.25).cov[1, 1] == pytest.approx(0.25)
    rng = np.random.default_rng(1)
    for w in rng.uniform(0.01, 5, 50):
        c = squeezed_ancilla(w).cov
        assert c[0, 0] * c[1, 1] == pytest.approx(0.25)
    # u = 1 is pure in this convention
    assert np.allclose(squeezed_ancilla(0.3, 1.0).symplectic_eigenvalues(), 1.0)
    for bad in (0.0, -1.0):
        with pytest.raises(ValueError):
            squeezed_ancilla(bad)


def test_unphysical_rejected():
    with pytest.raises(ValueError):
        GaussianState(np.zeros(2), np.diag([0.5, 0.5]))
    s = GaussianState(np.zeros(2), np.diag([0.5, 0.5]), check_physical=False)
    assert not s.is_physical()


def test_state_is_immutable():
    s = tmsv(0.3)
    with pytest.raises(ValueError):
        s.cov[0, 0] = 5.0


def test_symmetrised_on_construction():
    c = np.eye(2)
    c[0, 1] = 1e-13
    s = GaussianState(np.zeros(2), c)
    assert np.array_equal(s.cov, s.cov.T)


@pytest.mark.parametrize("tau", [0.0, 0.3, 0.7, 1.0])
def test_beam_splitter_symplectic(tau):
    S = beam_splitter(tau).matrix
    assert np.max(np.abs(S @ omega(2) @ S.T - omega(2))) <= 1e-12


def test_beam_splitter_limits():
    # transmitted arm keeps the input at tau = 1
    S = beam_splitter(1.0).matrix
    assert np.allclose(S[:2, :2], np.eye(2)) and np.allclose(S[:2, 2:], 0)
    assert apply(beam_splitter(0.5), vacuum(2)).allclose(vacuum(2))
    for bad in (-0.1, 1.1):
        with pytest.raises(ValueError):
            beam_splitter(bad)
    with pytest.raises(ValueError):
        beam_splitter(0.5, 2, 0, 0)
    with pytest.raises(IndexError):
        beam_splitter(0.5, 2, 0, 3)


def test_split_of_tmsv():
    # BS on (A, vacuum) of tmsv: cross-correlation of B with transmitted arm scales with sqrt(tau)
    r, tau = 0.8, 0.3
    s = apply(beam_splitter(tau, 3, 1, 2), tensor(tmsv(r), vacuum(1)))
    assert s.cov[0, 2] == pytest.approx(math.sqrt(tau) * math.sinh(2 * r))
    assert s.cov[2, 2] == pytest.approx(tau * math.cosh(2 * r) + 1 - tau)
    assert s.cov[0, 4] == pytest.approx(math.sqrt(1 - tau) * math.sinh(2 * r))
    assert s.is_physical()


def test_apply_checks():
    s = tmsv(0.4)
    assert apply(SymplecticTransform.identity(2), s).allclose(s)
    with pytest.raises(ValueError):
        apply(SymplecticTransform.identity(3), s)
    with pytest.raises(ValueError):
        SymplecticTransform(np.diag([2.0, 2.0]))


def test_coupling_matrices_symplectic():
    for M in (X_COUPLING, P_COUPLING):
        assert np.max(np.abs(M @ omega(2) @ M.T - omega(2))) <= 1e-12


def test_symplectic_invariance_random():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(1, 4))
        s = random_state(rng, n)
        S = random_symplectic(rng, n)
        assert np.max(np.abs(S.matrix @ omega(n) @ S.matrix.T - omega(n))) <= 1e-12
        before = s.symplectic_eigenvalues()
        after = apply(S, s).symplectic_eigenvalues()
        assert np.allclose(before, after, rtol=1e-9)


def test_tensor_and_trace():
    assert tensor(vacuum(1), vacuum(1)).allclose(vacuum(2))
    a, b = tmsv(0.6), coherent(0.2, 0.1)
    t = tensor(a, b)
    assert t.cov.shape == (6, 6)
    assert np.allclose(t.cov[:4, 4:], 0)
    assert partial_trace(t, [0, 1]).allclose(a)
    assert partial_trace(t, [0, 1, 2]).allclose(t)
    r = 0.7
    th = partial_trace(tmsv(r), [0])
    assert np.allclose(th.cov, math.cosh(2 * r) * np.eye(2))
    swapped = partial_trace(t, [2, 0, 1])
    assert np.allclose(swapped.mean[:2], [0.2, 0.1])
    for bad in ([], [0, 0], [5]):
        with pytest.raises((ValueError, IndexError)):
            partial_trace(t, bad)


def test_json_roundtrip():
    s = displace(tmsv(0.3), 1, 0.5, -0.25)
    doc = s.to_json()
    assert '"n_modes": 2' in doc
    assert GaussianState.from_json(doc).allclose(s, atol=0)


def test_symplectic_eigenvalues_thermal():
    assert np.allclose(symplectic_eigenvalues(np.diag([3.0, 3.0, 1.5, 1.5])), [1.5, 3.0])


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    n=st.integers(1, 3),
    keep=st.integers(0, 2),
)
def test_physicality_preserved(seed, n, keep):
    rng = np.random.default_rng(seed)
    s = random_state(rng, n)
    out = apply(random_symplectic(rng, n), s)
    assert out.symplectic_eigenvalues().min() >= 1 - 1e-9
    t = tensor(out, vacuum(1))
    assert t.is_physical()
    k = min(keep, n)
    assert partial_trace(t, [k]).is_physical()


@settings(max_examples=50, deadline=None)
@given(tau=st.floats(0, 1), seed=st.integers(0, 1000))
def test_vacuum_invariance(tau, seed):
    rng = np.random.default_rng(seed)
    n = 3
    a, b = (int(i) for i in rng.choice(n, 2, replace=False))
    S = beam_splitter(tau, n, a, b)
    assert np.max(np.abs(S.matrix @ omega(n) @ S.matrix.T - omega(n))) <= 1e-12
    assert apply(S, vacuum(n)).allclose(vacuum(n), atol=1e-12)
