import numpy as np
import pytest

from wienervar.core.exceptions import ConfigurationError
from wienervar.models.grid import TimeGrid
from wienervar.schemas.drift import DriftFamily
from wienervar.schemas.experiment import (
    FunctionalDescriptor,
    LinearFunctionalDescriptor,
    ParamFunctionalDescriptor,
    PotentialDescriptor,
)
from wienervar.services.descriptor_service import descriptor_service
from wienervar.services.wiener_core import sample_paths


@pytest.mark.parametrize(
    "fields, kind",
    [
        ({"kind": "linear-terminal", "c": 2.0}, "linear-terminal"),
        ({"kind": "quadratic-terminal", "a": 0.25}, "quadratic-terminal"),
        ({"kind": "constant", "b": -1.0}, "custom"),
        ({"kind": "polynomial-terminal", "coefficients": [0.0, 1.0, 0.1]}, "custom"),
        ({"kind": "exp-sup-norm"}, "custom"),
        ({"kind": "cylinder", "knots": [0.5, 1.0], "linear": [1.0, 1.0], "quadratic": [0.0, 0.1]}, "cylinder"),
        ({"kind": "potential-terminal", "potential": {"kind": "polynomial", "coefficients": [0.0, 0.0, 0.5]}}, "potential-terminal"),
    ],
)
def test_every_functional_kind_builds(grid16, fields, kind):
    F = descriptor_service.functional(FunctionalDescriptor(**fields))
    assert F.kind == kind
    values = F.evaluate_batch(sample_paths(grid16, 1, 10, seed=1))
    assert values.shape == (10,)
    assert np.all(np.isfinite(values))


def test_declared_growth_overrides_builder():
    F = descriptor_service.functional(
        FunctionalDescriptor(kind="linear-terminal", growth={"c1": 0.1, "alpha": 1.0, "c2": 2.0})
    )
    assert F.growth.c2 == 2.0
    assert F.terminal is not None


def test_potential_terminal_is_minus_v(grid16):
    F = descriptor_service.functional(
        FunctionalDescriptor(kind="potential-terminal", potential={"kind": "polynomial", "coefficients": [1.0, 0.0, 0.5]})
    )
    batch = sample_paths(grid16, 1, 5, seed=2)
    x = batch.terminal()[:, 0]
    np.testing.assert_allclose(F.evaluate_batch(batch), -(1.0 + 0.5 * x ** 2))


def test_linear_functional_kinds():
    grid = TimeGrid.uniform(8)
    identity = descriptor_service.linear_functional(LinearFunctionalDescriptor(scale=2.0), grid)
    assert identity.h_norm == pytest.approx(2.0)
    truncated = descriptor_service.linear_functional(LinearFunctionalDescriptor(kind="truncated", t_max=0.25), grid)
    assert truncated.h_norm == pytest.approx(0.5)
    np.testing.assert_allclose(truncated.representer.values()[-1], [0.25])
    piecewise = descriptor_service.linear_functional(
        LinearFunctionalDescriptor(kind="piecewise", knots=[0.0, 0.5, 1.0], slopes=[1.0, -1.0]), grid
    )
    np.testing.assert_allclose(piecewise.representer.values()[[0, 4, 8], 0], [0.0, 0.5, 0.0])


def test_truncation_time_must_be_a_knot():
    with pytest.raises(ConfigurationError):
        descriptor_service.linear_functional(LinearFunctionalDescriptor(kind="truncated", t_max=0.3), TimeGrid.uniform(8))


def test_conditional_slice_descriptor(grid16):
    G = descriptor_service.param_functional(
        ParamFunctionalDescriptor(
            kind="conditional-slice", lambda_low=-3.0, lambda_high=3.0,
            functional={"kind": "linear-terminal", "c": 1.0}, l={"kind": "identity"},
        ),
        grid16,
    )
    batch = sample_paths(grid16, 1, 4, seed=3)
    np.testing.assert_allclose(G.evaluate_batch(batch, 1.25), 1.25, atol=1e-12)
    assert G.contains(np.array([3.0]))


def test_potentials():
    p = descriptor_service.potential(PotentialDescriptor(kind="double_well", alpha=1.0, beta=1.0, half_width=5.0))
    assert p.half_width == 5.0
    q = descriptor_service.potential(PotentialDescriptor(kind="polynomial", coefficients=[0.0, 0.0, 1.0], floor="none"))
    assert q.linear_floor is None


def test_drift_defaults_to_declared_theta():
    family = DriftFamily(kind="constant", theta=[0.5])
    grid = TimeGrid.uniform(4)
    v = descriptor_service.drift(family)
    assert v.level(0, grid, np.zeros((1, 5, 1)))[0, 0] == pytest.approx(0.5)
