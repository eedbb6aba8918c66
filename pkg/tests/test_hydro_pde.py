import numpy as np
import pytest

import fluctlat as fl
from fluctlat.errors import CFLError, ConsistencyError, NumericalError
from fluctlat.grids import FieldGrid
from fluctlat.hydro_pde import energy_variational_bound


def test_stationary_half_profile(constant_rate):
    traj = fl.solve_hydro(lambda x: 0.5 + 0.0 * np.asarray(x), 0.5, 0.5, constant_rate, nx=32, T=0.2)
    assert np.max(np.abs(traj.rho - 0.5)) == 0.0
    assert np.max(np.abs(traj.kdot)) < 1e-14


def test_linear_ssep_steady_state(zero_rate):
    traj = fl.solve_hydro(lambda x: (np.asarray(x) + 1) / 2, 0.0, 1.0, zero_rate, nx=32, T=0.2)
    assert np.max(np.abs(traj.rho - (traj.grid.x + 1) / 2)) < 1e-13
    # canonical current: Qdot = -1/2 grad rho = -1/4 everywhere
    assert np.allclose(traj.qdot, -0.25, atol=1e-12)


def test_grid_refinement_quadratic(constant_rate, bump_profile):
    ref = fl.solve_hydro(bump_profile, 0.5, 0.5, constant_rate, nx=256, T=0.1)
    errs = []
    for nx in (32, 64):
        t = fl.solve_hydro(bump_profile, 0.5, 0.5, constant_rate, nx=nx, T=0.1)
        errs.append(abs(t.rho[-1, nx // 2] - ref.rho[-1, 128]))
    assert errs[0] < 1e-3
    assert errs[1] < errs[0] / 3.0  # at least ~quadratic decay


def test_maximum_principle_pure_ssep(zero_rate):
    gamma = lambda x: 0.4 + 0.3 * np.sin(np.pi * np.asarray(x)) ** 2
    # boundary values gamma(+-1) = 0.4
    traj = fl.solve_hydro(gamma, 0.4, 0.4, zero_rate, nx=64, T=0.3)
    assert traj.rho.min() >= 0.4 - 1e-10
    assert traj.rho.max() <= 0.7 + 1e-10


def test_cfl_enforced(constant_rate):
    with pytest.raises(CFLError):
        fl.solve_hydro(lambda x: 0.5 + 0.0 * np.asarray(x), 0.5, 0.5, constant_rate, nx=64, nt=10, T=1.0)


def test_boundary_mismatch_rejected(constant_rate):
    with pytest.raises(ConsistencyError):
        fl.solve_hydro(lambda x: 0.5 + 0.0 * np.asarray(x), 0.1, 0.9, constant_rate, nx=32, T=0.1)


def test_blowup_aborts(constant_rate):
    # a large creation tilt pushes the density past 1 and must abort, not clip
    with pytest.raises(NumericalError):
        fl.solve_hydro(
            lambda x: 0.5 + 0.0 * np.asarray(x), 0.5, 0.5, constant_rate,
            G=lambda x: 6.0 + 0.0 * np.asarray(x), nx=32, T=0.5,
        )


def test_weak_residual_zero_testfunction(untilted_traj, constant_rate):
    phi = untilted_traj.grid.zero_field()
    assert fl.weak_residual(untilted_traj, None, None, phi, 0.25, constant_rate) == 0.0


def test_weak_residual_stationary(constant_rate):
    traj = fl.solve_hydro(lambda x: 0.5 + 0.0 * np.asarray(x), 0.5, 0.5, constant_rate, nx=32, T=0.2)
    phi = traj.grid.sample(lambda x: 1.0 - x**2)
    r = fl.weak_residual(traj, None, None, phi, 0.2, constant_rate)
    assert abs(r) < 5 * traj.grid.dx**2


def test_weak_residual_refinement(constant_rate, bump_profile):
    res = []
    for nx in (32, 64):
        traj = fl.solve_hydro(bump_profile, 0.5, 0.5, constant_rate, nx=nx, T=0.1)
        phi = traj.grid.sample(lambda x: 1.0 - x**2)
        r = abs(fl.weak_residual(traj, None, None, phi, 0.1, constant_rate))
        res.append(r)
        assert r < 5 * (traj.grid.dx**2 + traj.grid.dt)
    assert res[1] < res[0]


def test_weak_residual_rejects_bad_testfunction(untilted_traj, constant_rate):
    phi = untilted_traj.grid.sample(lambda x: 1.0 + 0.0 * np.asarray(x))
    with pytest.raises(ConsistencyError):
        fl.weak_residual(untilted_traj, None, None, phi, 0.25, constant_rate)


def test_l1_contraction_trivial(untilted_traj, constant_rate):
    d, mono = fl.l1_contraction_check(untilted_traj, untilted_traj, constant_rate)
    assert np.all(d == 0.0)
    assert mono


def test_l1_contraction_two_initial_data(constant_rate, bump_profile):
    t1 = fl.solve_hydro(bump_profile, 0.5, 0.5, constant_rate, nx=64, T=0.25)
    t2 = fl.solve_hydro(lambda x: 0.5 + 0.0 * np.asarray(x), 0.5, 0.5, constant_rate, nx=64, T=0.25)
    d, mono = fl.l1_contraction_check(t1, t2, constant_rate)
    assert mono
    assert d[-1] < d[0]


def test_l1_contraction_pure_ssep(zero_rate):
    t1 = fl.solve_hydro(lambda x: 0.5 + 0.3 * np.sin(np.pi * np.asarray(x)), 0.5, 0.5, zero_rate, nx=64, T=0.2)
    t2 = fl.solve_hydro(lambda x: 0.5 + 0.0 * np.asarray(x), 0.5, 0.5, zero_rate, nx=64, T=0.2)
    d, mono = fl.l1_contraction_check(t1, t2, zero_rate)
    assert mono


def test_l1_contraction_requires_monotone_rate(untilted_traj):
    ns = fl.build_cylinder_rate("neighbor-sum")
    with pytest.raises(ConsistencyError):
        fl.l1_contraction_check(untilted_traj, untilted_traj, ns)


def test_energy_constant_is_zero(constant_rate):
    traj = fl.solve_hydro(lambda x: 0.5 + 0.0 * np.asarray(x), 0.5, 0.5, constant_rate, nx=32, T=0.2)
    assert fl.energy(traj) == 0.0


def test_energy_linear_profile(zero_rate):
    # rho=(x+1)/2 held for T=1: 1/2 * T * int_{-1}^{1} (1/2)^2 dx = 1/4
    traj = fl.solve_hydro(lambda x: (np.asarray(x) + 1) / 2, 0.0, 1.0, zero_rate, nx=64, T=1.0)
    assert fl.energy(traj) == pytest.approx(0.25, abs=1e-12)


def test_energy_variational_bound(untilted_traj):
    direct = fl.energy(untilted_traj)
    prev = -np.inf
    for n in (2, 8, 16):
        lb = energy_variational_bound(untilted_traj, n_modes=n)
        assert lb <= direct + 1e-10
        assert lb >= prev - 1e-12
        prev = lb
    assert prev > 0.9 * direct  # 16 modes nearly saturate a smooth profile


def test_current_consistency(untilted_traj):
    # dt rho + div Qdot - Kdot = O(dx^2 + dt) on solver output
    g = untilted_traj.grid
    dtr = np.gradient(untilted_traj.rho, g.dt, axis=0, edge_order=2)
    divq = np.gradient(untilted_traj.qdot, g.dx, axis=1, edge_order=2)
    resid = dtr + divq - untilted_traj.kdot
    assert np.max(np.abs(resid[:, 2:-2])) < 20 * (g.dx**2 + g.dt)
