import numpy as np
import pytest
from hypothesis import given, strategies as st

from wienervar.core.exceptions import ConfigurationError
from wienervar.models.grid import CameronMartinPath, DoleansWeight, PathBatch, TimeGrid, WienerPath, grid_for


def test_uniform_grid():
    grid = TimeGrid.uniform(16)
    assert grid.n_steps == 16
    assert grid.n_knots == 17
    assert grid.knots[0] == 0.0 and grid.knots[-1] == 1.0
    assert np.sum(grid.dt) == pytest.approx(1.0, abs=1e-15)


def test_grid_for_uses_default_steps():
    assert grid_for(None).n_steps == 256
    assert grid_for(4).n_steps == 4


@pytest.mark.parametrize(
    "knots",
    [
        [0.0, 0.6, 0.4, 1.0],
        [0.1, 1.0],
        [0.0, 0.5],
        [0.0],
    ],
)
def test_invalid_grids_are_rejected(knots):
    with pytest.raises(ConfigurationError):
        TimeGrid(np.array(knots))


def test_uniform_rejects_nonpositive_steps():
    with pytest.raises(ConfigurationError):
        TimeGrid.uniform(0)


def test_index_of_requires_a_knot(grid16):
    assert grid16.index_of(0.25) == 4
    assert grid16.index_of(1.0) == 16
    with pytest.raises(ConfigurationError):
        grid16.index_of(0.3)


def test_grid_is_immutable(grid8):
    with pytest.raises(ValueError):
        grid8.knots[1] = 0.5


def test_path_must_vanish_at_origin(grid8):
    values = np.ones(grid8.n_knots)
    with pytest.raises(ConfigurationError):
        WienerPath(grid8, values)


def test_path_shape_is_checked(grid8):
    with pytest.raises(ConfigurationError):
        WienerPath(grid8, np.zeros(grid8.n_knots + 1))


def test_path_accessors(grid8):
    values = np.zeros((grid8.n_knots, 2))
    values[:, 0] = grid8.knots
    values[:, 1] = -2.0 * grid8.knots
    path = WienerPath(grid8, values)
    assert path.dimension == 2
    np.testing.assert_allclose(path.at(0.5), [0.5, -1.0])
    assert path.sup_norm() == pytest.approx(np.sqrt(5.0))
    assert path.as_batch().n_paths == 1


def test_batch_accessors(grid8):
    values = np.zeros((3, grid8.n_knots, 1))
    values[:, :, 0] = np.outer([1.0, 2.0, -3.0], grid8.knots)
    batch = PathBatch(grid8, values)
    np.testing.assert_allclose(batch.terminal()[:, 0], [1.0, 2.0, -3.0])
    np.testing.assert_allclose(batch.sup_norm(), [1.0, 2.0, 3.0])
    assert batch.increments().shape == (3, 8, 1)


def test_cameron_martin_constant_slope(grid16):
    h = CameronMartinPath(grid16, np.full(grid16.n_steps, 2.0))
    assert h.values()[-1, 0] == pytest.approx(2.0)
    assert h.norm_sq() == pytest.approx(4.0, abs=1e-12)
    assert h.scaled(0.5).norm_sq() == pytest.approx(1.0, abs=1e-12)


def test_cameron_martin_identity_pairs_to_terminal_value(grid16):
    rng = np.random.default_rng(0)
    values = np.zeros((grid16.n_knots, 1))
    values[1:, 0] = np.cumsum(rng.standard_normal(grid16.n_steps))
    h = CameronMartinPath.identity(grid16)
    assert h.pairing(values) == pytest.approx(values[-1, 0], abs=1e-12)


def test_cameron_martin_rejects_nonfinite(grid8):
    slopes = np.zeros(grid8.n_steps)
    slopes[3] = np.nan
    with pytest.raises(ConfigurationError):
        CameronMartinPath(grid8, slopes)


@given(
    st.lists(st.floats(-5, 5), min_size=8, max_size=8),
    st.lists(st.floats(-5, 5), min_size=8, max_size=8),
)
def test_inner_product_is_symmetric_and_positive(a, b):
    grid = TimeGrid.uniform(8)
    h1, h2 = CameronMartinPath(grid, a), CameronMartinPath(grid, b)
    assert h1.inner(h2) == pytest.approx(h2.inner(h1), abs=1e-12)
    assert h1.norm_sq() >= 0.0
    assert abs(h1.inner(h2)) <= np.sqrt(h1.norm_sq() * h2.norm_sq()) + 1e-9


def test_doleans_weight():
    weight = DoleansWeight(stochastic_integral=0.3, energy=0.5)
    assert weight.log_value == pytest.approx(0.05)
    assert weight.value == pytest.approx(np.exp(0.05))
    with pytest.raises(ConfigurationError):
        DoleansWeight(stochastic_integral=0.0, energy=-1.0)
