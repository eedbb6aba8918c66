import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import fluctlat as fl
from fluctlat.errors import DomainError, ValidationError
from fluctlat.rates import mean_cylinder


def test_constant_rate_coefficients():
    rate = fl.build_cylinder_rate("constant")
    alpha = np.linspace(0, 1, 21)
    C, A = fl.macroscopic_rates(rate, alpha)
    assert np.allclose(C, 1 - alpha, atol=1e-14)
    assert np.allclose(A, alpha, atol=1e-14)


def test_neighbor_sum_coefficients_closed_form():
    # c(eta) = eta(-1) + eta(1), so the birth part is (eta(-1)+eta(1))(1-eta(0))
    # with Bernoulli(alpha) mean 2 alpha (1-alpha), and the death part 2 alpha^2
    rate = fl.build_cylinder_rate("neighbor-sum")
    alpha = np.linspace(0, 1, 21)
    C, A = fl.macroscopic_rates(rate, alpha)
    assert np.allclose(C, 2 * alpha * (1 - alpha), atol=1e-14)
    assert np.allclose(A, 2 * alpha**2, atol=1e-14)


def test_zero_rate_coefficients():
    rate = fl.build_cylinder_rate("zero")
    C, A = fl.macroscopic_rates(rate, np.linspace(0, 1, 5))
    assert np.all(C == 0) and np.all(A == 0)


def test_window_bit_order_msb_is_leftmost_site():
    # table selecting only the window (eta(-1),eta(0),eta(1)) = (1,0,0), i.e.
    # index 0b100 = 4: its Bernoulli weight is alpha (1-alpha)^2
    table = np.zeros(8)
    table[4] = 1.0
    alpha = 0.3
    assert mean_cylinder(table, 1, alpha) == pytest.approx(alpha * (1 - alpha) ** 2)


def test_conductivity_and_boundary_density():
    assert fl.conductivity(0.5) == pytest.approx(0.25)
    assert fl.boundary_density(1.0) == pytest.approx(0.5)
    assert fl.boundary_density(3.0) == pytest.approx(0.75)
    assert fl.boundary_density(0.0) == 0.0


def test_macroscopic_rates_domain_error():
    rate = fl.build_cylinder_rate("constant")
    with pytest.raises(DomainError):
        fl.macroscopic_rates(rate, 1.5)


def test_assumption_checks():
    assert fl.check_assumptions(fl.build_cylinder_rate("constant")).L1_ok
    assert fl.check_assumptions(fl.build_cylinder_rate("constant")).L2_ok
    ns = fl.check_assumptions(fl.build_cylinder_rate("neighbor-sum"))
    assert not ns.L2_ok
    assert fl.check_assumptions(fl.build_cylinder_rate("zero")).L1_ok


def test_rate_validation():
    with pytest.raises(ValidationError):
        fl.build_cylinder_rate("no-such-rate")
    with pytest.raises(ValidationError):
        fl.CylinderRate(0, np.array([-1.0, 1.0]))
    with pytest.raises(ValidationError):
        fl.CylinderRate(1, np.ones(4))  # wrong table size for M=1


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(0, 5), min_size=8, max_size=8),
    st.floats(0, 1),
)
def test_mean_cylinder_bounds(table, alpha):
    table = np.asarray(table)
    m = mean_cylinder(table, 1, alpha)
    assert table.min() - 1e-12 <= m <= table.max() + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 5), min_size=8, max_size=8))
def test_mean_cylinder_endpoints(table):
    table = np.asarray(table)
    assert mean_cylinder(table, 1, 0.0) == pytest.approx(table[0])
    assert mean_cylinder(table, 1, 1.0) == pytest.approx(table[-1])


def test_custom_rate_infers_range():
    rate = fl.build_cylinder_rate([2.0, 0.5])
    assert rate.range == 0
    C, A = fl.macroscopic_rates(rate, 0.5)
    assert C == pytest.approx(1.0)
    assert A == pytest.approx(0.25)
