import numpy as np
import pytest
from numpy.polynomial import Polynomial

from wienervar.core.exceptions import ConfigurationError
from wienervar.models.potential import NonconvexRegion, Potential1D, polynomial_floor


def test_polynomial_potential_derivatives():
    p = Potential1D.polynomial([1.0, 0.0, 0.5])
    x = np.array([-1.0, 0.0, 2.0])
    np.testing.assert_allclose(p.V(x), [1.5, 1.0, 3.0])
    np.testing.assert_allclose(p.dV(x), x)
    np.testing.assert_allclose(p.d2V(x), 1.0)


def test_automatic_floor():
    assert Potential1D.polynomial([0.0, 0.0, 0.5]).linear_floor[1] == pytest.approx(0.0, abs=1e-10)
    assert Potential1D.polynomial([2.0, 3.0]).linear_floor == (3.0, 2.0)
    assert Potential1D.polynomial([0.0, 0.0, 0.5], floor="none").linear_floor is None


def test_no_floor_for_odd_degree():
    assert polynomial_floor(Polynomial([0.0, 0.0, 0.0, 1.0])) is None


def test_double_well_floor_is_its_minimum():
    p = Potential1D.double_well(1.0, 1.0)
    # min of ½x⁴ − ½x² is −1/8 at x² = ½
    assert p.linear_floor[0] == 0.0
    assert p.linear_floor[1] == pytest.approx(-0.125, abs=1e-9)
    assert p.linear_floor[1] <= -0.125


def test_declared_floor_is_checked():
    with pytest.raises(ConfigurationError):
        Potential1D.polynomial([0.0, 0.0, 1.0], floor=(0.0, 1.0))


def test_double_well_parameters_must_be_positive():
    with pytest.raises(ConfigurationError):
        Potential1D.double_well(0.0, 1.0)


def test_half_width_defaults_to_twelve_sigma():
    assert Potential1D.polynomial([0.0, 0.0, 0.5], sigma=2.0).half_width == pytest.approx(24.0)
    assert Potential1D.polynomial([0.0, 0.0, 0.5], half_width=5.0).half_width == 5.0


def test_sigma_must_be_positive():
    with pytest.raises(ConfigurationError):
        Potential1D.polynomial([0.0, 0.0, 0.5], sigma=0.0)


def test_from_callables_cross_checks_derivatives():
    p = Potential1D.from_callables(np.cosh, np.sinh, np.cosh, half_width=3.0, linear_floor=(0.0, 1.0))
    assert p.label == "V"
    with pytest.raises(ConfigurationError):
        Potential1D.from_callables(lambda x: x ** 2, lambda x: 3.0 * x, lambda x: 2.0 + 0.0 * x, half_width=3.0)


def test_nonfinite_potential_is_rejected():
    with pytest.raises(ConfigurationError):
        Potential1D.from_callables(np.exp, np.exp, np.exp, half_width=1000.0)


def test_nonconvex_region():
    region = NonconvexRegion([(-1.0, -0.5), (0.5, 1.0)])
    assert not region.empty
    assert region.contains(0.75) and not region.contains(0.0)
    assert NonconvexRegion().empty
