import numpy as np
import pytest

import fluctlat as fl


@pytest.fixture(scope="session")
def constant_rate():
    return fl.build_cylinder_rate("constant")


@pytest.fixture(scope="session")
def zero_rate():
    return fl.build_cylinder_rate("zero")


@pytest.fixture(scope="session")
def bump_profile():
    return lambda x: 0.5 + 0.25 * (1.0 - np.asarray(x) ** 2)


def tilt_h0(t, x):
    # vanishes at x = -1 and x = +1 for all t
    return 0.3 * (1.0 - np.cos(np.pi * (np.asarray(x) + 1.0))) * (1.0 + t)


def tilt_g0(t, x):
    return 0.4 * np.sin(np.pi * np.asarray(x)) * (1.0 + 0.5 * t)


@pytest.fixture(scope="session")
def tilted_traj(constant_rate, bump_profile):
    """Hydrodynamic solution driven by smooth (G0, H0) tilts, nx=64, T=0.25."""
    return fl.solve_hydro(
        bump_profile, 0.5, 0.5, constant_rate, G=tilt_g0, H=tilt_h0, nx=64, T=0.25
    )


@pytest.fixture(scope="session")
def selftilted_traj(constant_rate, bump_profile):
    """Hydrodynamic solution with G0 = H0 (the contraction round-trip shape)."""
    return fl.solve_hydro(
        bump_profile, 0.5, 0.5, constant_rate, G=tilt_h0, H=tilt_h0, nx=64, T=0.25
    )


@pytest.fixture(scope="session")
def untilted_traj(constant_rate, bump_profile):
    return fl.solve_hydro(bump_profile, 0.5, 0.5, constant_rate, nx=64, T=0.25)
