import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvseq import entanglement as ent
from cvseq.gaussian import duan_zeta, tmsv
from cvseq.measurement import displace
from cvseq.teleport import Infeasible

# Equal-zeta chain at r = 1.0706 and zeta = 2 - 1e-6, iterated independently
# in the exploratory session (closed form and a float bisection agree).
CHAIN_1_0706 = [0.8824857581, 0.7408404127, 0.5721131162, 0.3536248549, 0.0001429143]
GREEDY_R50 = [1.0, 0.875, 0.7321428571, 0.5614111498, 0.3387579303, -0.0302371214]


def test_round1_formula():
    assert ent.zeta_round1(0.8, 0.2, 0.2) == pytest.approx(0.803793, abs=1e-6)
    assert ent.zeta_round1(0.7, 1e-12, 1e-12) == pytest.approx(2 * math.exp(-1.4), abs=1e-10)
    r = 0.4
    edge = 1 - math.exp(-2 * r)
    assert ent.zeta_round1(r, edge - 1e-9, edge - 1e-9) < 2
    assert ent.zeta_round1(r, edge + 1e-9, edge + 1e-9) > 2
    with pytest.raises(ValueError):
        ent.zeta_round1(0.4, 0.0, 0.1)


def test_sequential_first_round_and_range():
    s = ent.UnsharpSchedule.equal(0.9, [0.3, 0.4])
    assert ent.zeta_sequential(s, 1) == ent.zeta_round1(0.9, 0.3, 0.3)
    # back-action of round 1 is half of u/w summed over both parties
    assert ent.zeta_sequential(s, 2) == pytest.approx(ent.zeta_round1(0.9, 0.4, 0.4) + 0.5 * 2 * 0.25 / 0.3)
    with pytest.raises(ValueError):
        ent.zeta_sequential(s, 3)
    with pytest.raises(ValueError):
        ent.UnsharpSchedule(((0.3, -0.1),), 0.9)


@settings(max_examples=200, deadline=None)
@given(r=st.floats(0.0, 3.0), w=st.floats(0.01, 2.0), k=st.integers(1, 8))
def test_equal_omega_bound_consistency(r, w, k):
    s = ent.UnsharpSchedule.equal(r, [w] * k)
    bound = ent.equal_omega_bound(r, w)
    for n in range(1, k + 1):
        z = ent.zeta_sequential(s, n)
        if abs(z - 2) > 1e-9:
            assert (z < 2) == (n < bound)


def test_optimal_omega():
    # sqrt(exp(-0.5) sinh 0.5) = 0.56219239 (0.562191 when truncated)
    assert ent.optimal_omega(0.5) == pytest.approx(0.5621923865, abs=1e-9)
    for r in (0.2, 0.6, 1.0, 2.0):
        grid = np.arange(1e-4, 1.5, 1e-5)
        best = grid[np.argmax([ent.equal_omega_bound(r, w) for w in grid])]
        assert math.sqrt(best) == pytest.approx(ent.optimal_omega(r), abs=1e-4)


def test_dnmax_equal_crossover():
    rc = ent.equal_omega_crossover()
    assert rc == pytest.approx(0.5 * math.log(2 + math.sqrt(2)), abs=1e-15)
    assert ent.dnmax_bound(rc) == pytest.approx(2.0, abs=1e-12)
    assert ent.dnmax_equal(rc - 1e-7) == 1
    assert ent.dnmax_equal(rc + 1e-7) == 2
    assert ent.dnmax_equal(0.0) == 0
    assert ent.dnmax_equal(5.0) == 2
    # at r = 0 even the best single round misses
    assert ent.equal_omega_bound(0.0, 0.1) < 1


def test_greedy_chain_large_r():
    chain = ent.greedy_omega_chain(50.0)
    assert len(chain) == 6
    assert np.allclose(chain, GREEDY_R50, atol=1e-9)
    assert chain[1] == 7 / 8
    assert sum(1 for w in chain if w > 0) == 5
    assert ent.greedy_omega_chain(0.0)[0] <= 0


def test_greedy_chain_is_supremum():
    r = 1.5
    chain = [w for w in ent.greedy_omega_chain(r) if w > 0]
    sched = ent.UnsharpSchedule.equal(r, chain)
    for n in range(1, len(chain) + 1):
        assert ent.zeta_sequential(sched, n) == pytest.approx(2.0, abs=1e-12)
    for i in range(len(chain)):
        up = list(chain)
        up[i] += 1e-6
        s = ent.UnsharpSchedule.equal(r, up)
        assert ent.zeta_sequential(s, i + 1) > 2
        if i + 1 < len(chain):
            down = list(chain)
            down[i] -= 1e-6
            s = ent.UnsharpSchedule.equal(r, down)
            assert ent.zeta_sequential(s, i + 2) > 2


def test_next_equal_zeta():
    r = 0.7
    w = 0.25
    z = 2 * math.exp(-2 * r) + 2 * w
    assert ent.omega_next_equal_zeta(r, z, []) == pytest.approx(w, abs=1e-15)
    floor = 2 * math.exp(-2 * r)
    assert ent.omega_next_equal_zeta(r, floor, []) == 0.0
    assert isinstance(ent.omega_next_equal_zeta(r, floor, [0.0]), Infeasible)
    assert isinstance(ent.omega_next_equal_zeta(r, floor - 1e-3, []), Infeasible)
    assert isinstance(ent.omega_next_equal_zeta(r, 0.5, [0.01]), Infeasible)


def test_equal_zeta_chain_boundary_case():
    rep = ent.equal_zeta_chain(1.0706, ent.ZETA_NEAR_TWO)
    assert rep.d_n == 5
    assert np.allclose(rep.omegas, CHAIN_1_0706, atol=1e-9)
    assert 0 < rep.omegas[-1] < 1e-3
    assert all(z == pytest.approx(ent.ZETA_NEAR_TWO, abs=1e-12) for z in rep.zetas)
    d = rep.to_dict()
    assert d["D_n"] == 5 and len(d["omega_sq"]) == 5


def test_table_and_boundaries():
    b = ent.detection_boundaries()
    assert np.allclose(b, [0.2181, 0.4245, 0.6752, 1.0706], atol=1e-3)
    assert [ent.detection_number(r) for r in (0.1, 0.3, 0.5, 0.9, 1.2, 3.0)] == [1, 2, 3, 4, 5, 5]
    reps = ent.detection_table([0.3, 1.2])
    assert [rep.d_n for rep in reps] == [2, 5]
    with pytest.raises(ValueError):
        ent.detection_table([0.3], 2.0)


def test_detection_monotone_in_zeta():
    for r in (0.3, 0.8, 1.5):
        zs = np.linspace(2 * math.exp(-2 * r) + 1e-9, 2 - 1e-9, 200)
        d = [ent.detection_number(r, z) for z in zs]
        assert np.all(np.diff(d) >= 0)


def test_mixture_basics():
    s = tmsv(0.6)
    assert ent.mixture_zeta(ent.MixtureState.pure(s)) == pytest.approx(duan_zeta(s), abs=1e-14)
    d = 0.7
    mix = ent.MixtureState([(0.5, displace(s, 0, d, 0)), (0.5, displace(s, 0, -d, 0))])
    assert ent.mixture_zeta(mix) == pytest.approx(duan_zeta(s) + d * d, abs=1e-12)
    unnorm = ent.MixtureState([(2.0, displace(s, 0, d, 0)), (2.0, displace(s, 0, -d, 0))], normalize=True)
    assert ent.mixture_zeta(unnorm) == pytest.approx(ent.mixture_zeta(mix), abs=1e-14)
    with pytest.raises(ValueError):
        ent.MixtureState([(0.3, s)])
    with pytest.raises(ValueError):
        ent.MixtureState([])


def test_round1_oracle_grid():
    worst = 0.0
    for r in np.linspace(0.05, 2.0, 20):
        s = tmsv(r)
        for w in np.linspace(0.05, 1.5, 20):
            z = ent.mixture_zeta(s, (w, w))
            worst = max(worst, abs(z - ent.zeta_round1(r, w, w)))
    assert worst <= 1e-10


def test_zero_backaction_leaves_state():
    s = ent.MixtureState.pure(tmsv(0.8))
    out = ent.propagate_unsharp_round(s, 0.3, 0.5, u=1e-14)
    assert len(out) == 4
    for w, comp in out.components:
        assert w == 0.25
        assert np.allclose(comp.cov, tmsv(0.8).cov, atol=1e-12)


def test_backaction_linear_and_constant():
    kappas = []
    for r in (0.5, 1.0, 2.0):
        base = ent.MixtureState.pure(tmsv(r))
        xs, ys = [], []
        for wa in (0.3, 0.6, 1.0):
            for wb in (0.3, 0.6, 1.0):
                after = ent.mixture_zeta(ent.propagate_unsharp_round(base, wa, wb))
                xs.append(0.25 / wa + 0.25 / wb)
                ys.append(after - duan_zeta(tmsv(r)))
                kappas.append(ent.backaction_coefficient(base, wa, wb))
        k, c = np.polyfit(xs, ys, 1)
        assert np.max(np.abs(np.polyval([k, c], xs) - ys)) < 1e-8
    assert np.ptp(kappas) < 1e-8
    assert kappas[0] == pytest.approx(0.5, abs=1e-12)


def test_oracle_matches_closed_form_sequence():
    s = ent.UnsharpSchedule(((0.3, 0.5), (0.4, 0.2), (0.6, 0.6)), 0.9)
    oracle = ent.oracle_zetas(s)
    closed = [ent.zeta_sequential(s, n) for n in (1, 2, 3)]
    assert np.allclose(oracle, closed, atol=1e-10)
    assert ent.detection_count(s) == 2


def test_component_guard():
    mix = ent.MixtureState.pure(tmsv(0.5))
    for _ in range(5):
        mix = ent.propagate_unsharp_round(mix, 0.5, 0.5)
    assert len(mix) == 1024
    with pytest.raises(ValueError):
        ent.propagate_unsharp_round(mix, 0.5, 0.5)
