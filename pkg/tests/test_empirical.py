import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import fluctlat as fl
from fluctlat.errors import ValidationError


def _state(N, occupancy, Q=None, K=None):
    occ = np.asarray(occupancy, dtype=np.int8)
    return fl.LatticeState(
        N=N,
        occupancy=occ,
        Q=np.zeros(2 * N, dtype=np.int64) if Q is None else np.asarray(Q, dtype=np.int64),
        K=np.zeros(2 * N + 1, dtype=np.int64) if K is None else np.asarray(K, dtype=np.int64),
        R_minus=0,
        R_plus=0,
        t=0.0,
        initial_occupancy=occ.copy(),
    )


def test_density_pairing_full_lattice():
    st8 = _state(8, np.ones(17))
    assert fl.pair_site_measure(st8, lambda x: 1.0) == pytest.approx(2.0)
    st0 = _state(8, np.zeros(17))
    assert fl.pair_site_measure(st0, lambda x: x**2) == 0.0


def test_density_pairing_hand_enumeration():
    # N=2, eta=(1,0,1,0,1), phi(x)=x: (1/2)[1*(-1) + 0 + 1*0 + 0] = -0.5
    s = _state(2, [1, 0, 1, 0, 1])
    assert fl.pair_site_measure(s, lambda x: x) == pytest.approx(-0.5)


def test_Q_gradient_pairing():
    s = _state(2, np.zeros(5), Q=[1, 1, 1, 1])
    assert fl.pair_Q_gradient(s, lambda x: x) == pytest.approx(1.0)
    assert fl.pair_Q_gradient(s, lambda x: 7.0) == pytest.approx(0.0)
    s0 = _state(2, np.zeros(5))
    assert fl.pair_Q_gradient(s0, lambda x: x**3) == 0.0


def test_Q_measure_scaling():
    s = _state(4, np.zeros(9), Q=np.ones(8))
    # (1/N^2) * sum Q(x) * 1 = 8/16
    assert fl.pair_Q_measure(s, lambda x: 1.0) == pytest.approx(0.5)


def test_K_pairing():
    K = np.zeros(9)
    K[4] = 3  # x=0
    s = _state(4, np.zeros(9), K=K)
    assert fl.pair_site_measure(s, lambda x: 1.0, "K") == pytest.approx(3 / 4)


def test_local_average():
    s = _state(4, np.ones(9))
    assert np.allclose(fl.local_average(s, 2), 1.0)
    alt = _state(8, [i % 2 for i in range(17)])
    mids = fl.local_average(alt, 6)[6:-6]
    assert np.all(np.abs(mids - 0.5) < 0.06)
    # N=3, x=0, l=1, window (1,0,1) -> 2/3
    s2 = _state(3, [0, 0, 1, 0, 1, 0, 0])
    assert fl.local_average(s2, 1)[3] == pytest.approx(2 / 3)


def test_observable_frozen_ones_cancels():
    psi = fl.CylinderObservable(1, [(w >> 1 & 1) * (w & 1) for w in range(8)])
    s = _state(16, np.ones(33))
    s.t = 0.0
    val = fl.local_equilibrium_statistic([s], psi, lambda x: 1.0, epsilon=0.2, T=1.0)
    assert val == pytest.approx(0.0, abs=1e-14)


def test_observable_eta0_self_cancellation():
    # psi = eta(0): psi(tau_x eta) and nu_alpha(psi) = alpha nearly cancel
    psi = fl.CylinderObservable(0, [0.0, 1.0])
    rng = np.random.default_rng(0)
    s = _state(64, (rng.random(129) < 0.5).astype(np.int8))
    val = fl.local_equilibrium_statistic([s], psi, lambda x: 1.0, epsilon=0.1, T=1.0)
    assert abs(val) < 0.05


def test_local_equilibrium_bias_matches_product_measure():
    """Strong oracle: at Bernoulli(1/2) equilibrium the statistic for
    psi = eta(0)eta(1) has exact mean -<Var(etabar^l(x))> (the block average
    includes the psi-window, so nu_{etabar}(psi) = etabar^2 overshoots by the
    block variance).  Clipped windows at the ends are accounted for."""
    rate = fl.build_cylinder_rate("constant")
    psi = fl.CylinderObservable(1, [(w >> 1 & 1) * (w & 1) for w in range(8)])
    N, eps = 64, 0.1
    ell = max(1, int(round(eps * N)))
    vals = []
    for r in range(48):
        p = fl.SimParams(
            N=N, T=0.05, beta_plus=1.0, beta_minus=1.0, rate=rate,
            gamma=lambda x: 0.5, seed=7000 ^ r, sample_times=(0.05,),
        )
        snap = fl.run(p).snapshots[-1]
        vals.append(
            fl.local_equilibrium_statistic([snap], psi, lambda x: 1.0, eps, T=0.05)
        )
    vals = np.array(vals)

    idx = np.arange(2 * N + 1)
    lo = np.maximum(idx - ell, 0)
    hi = np.minimum(idx + ell, 2 * N)
    var = 0.25 / (hi - lo + 1)
    R = 1
    predicted = -np.sum(var[R : 2 * N - R + 1]) / (2 * (N - R))
    se = vals.std(ddof=1) / np.sqrt(vals.size)
    assert abs(vals.mean() - predicted) < 4 * se


def test_micro_conservation_examples():
    s = _state(4, np.zeros(9))
    assert np.all(fl.conservation_residual_micro(s) == 0)


def test_discrete_relation_against_final_snapshot():
    # the empirical triple satisfies <rho_T phi> - <rho_0 phi>
    # = <Q_T grad phi> + <K_T phi> up to O(1/N) for phi vanishing at +-1
    p = fl.SimParams(
        N=64, T=0.2, beta_plus=1.0, beta_minus=1.0,
        rate=fl.build_cylinder_rate("constant"),
        gamma=lambda x: 0.5, seed=3,
    )
    res = fl.run(p)
    phi = lambda x: 1.0 - x**2
    final, init = res.snapshots[-1], res.initial
    lhs = fl.pair_site_measure(final, phi) - fl.pair_site_measure(init, phi)
    rhs = fl.pair_Q_gradient(final, phi) + fl.pair_site_measure(final, phi, "K")
    assert abs(lhs - rhs) < 5.0 / p.N


def test_observable_validation():
    with pytest.raises(ValidationError):
        fl.CylinderObservable(1, [1.0, 2.0])  # wrong table size
    with pytest.raises(ValidationError):
        fl.CylinderObservable(4, np.ones(2**9))  # range too large
    with pytest.raises(ValidationError):
        fl.pair_site_measure(_state(2, np.zeros(5)), lambda x: x, "bogus")


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**9 - 1), st.floats(1.0, 3.0))
def test_pairing_linearity(bits, scale):
    occ = [(bits >> i) & 1 for i in range(9)]
    s = _state(4, occ)
    phi1 = lambda x: x
    phi2 = lambda x: np.cos(x)
    combo = lambda x: scale * phi1(x) + phi2(x)
    lhs = fl.pair_site_measure(s, combo)
    rhs = scale * fl.pair_site_measure(s, phi1) + fl.pair_site_measure(s, phi2)
    assert lhs == pytest.approx(rhs, abs=1e-12)
    # exclusion bound
    assert abs(fl.pair_site_measure(s, phi1)) <= 2.0 + 1e-12
