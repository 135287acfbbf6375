import numpy as np
import pytest

from wienervar.core.config import settings
from wienervar.core.exceptions import ConfigurationError
from wienervar.core.parallel import PATH_BLOCK_SIZE, block_generator, block_ranges, derive_seed, map_blocks
from wienervar.models.grid import TimeGrid
from wienervar.services.wiener_core import map_path_blocks, sample_paths


def test_block_ranges_cover_every_path():
    ranges = block_ranges(2 * PATH_BLOCK_SIZE + 5)
    assert [b for b, _, _ in ranges] == [0, 1, 2]
    assert ranges[0][1] == 0
    assert ranges[-1][2] == 2 * PATH_BLOCK_SIZE + 5
    assert all(stop == nxt for (_, _, stop), (_, nxt, _) in zip(ranges, ranges[1:]))


def test_block_ranges_reject_empty():
    with pytest.raises(ConfigurationError):
        block_ranges(0)


def test_block_generator_rejects_negative_seed():
    with pytest.raises(ConfigurationError):
        block_generator(-1, 0)


def test_block_streams_are_distinct():
    a = block_generator(7, 0).standard_normal(4)
    b = block_generator(7, 1).standard_normal(4)
    c = block_generator(7, 0, stream=1).standard_normal(4)
    assert not np.allclose(a, b)
    assert not np.allclose(a, c)
    np.testing.assert_array_equal(a, block_generator(7, 0).standard_normal(4))


def test_derive_seed_is_deterministic():
    assert derive_seed(3, 1) == derive_seed(3, 1)
    assert derive_seed(3, 1) != derive_seed(3, 2)
    assert derive_seed(3, 1) != derive_seed(4, 1)
    assert derive_seed(3, 1, 2) >= 0


def test_map_blocks_keeps_path_order():
    out = map_blocks(3 * PATH_BLOCK_SIZE, lambda b, start, stop: np.arange(start, stop))
    np.testing.assert_array_equal(out, np.arange(3 * PATH_BLOCK_SIZE))


def test_results_do_not_depend_on_thread_count(monkeypatch):
    grid = TimeGrid.uniform(8)
    n = 2 * PATH_BLOCK_SIZE + 17
    monkeypatch.setattr(settings, "THREADS", 1)
    single = map_path_blocks(grid, 1, n, 11, lambda batch: batch.terminal()[:, 0])
    monkeypatch.setattr(settings, "THREADS", 4)
    parallel = map_path_blocks(grid, 1, n, 11, lambda batch: batch.terminal()[:, 0])
    np.testing.assert_array_equal(single, parallel)


def test_path_depends_only_on_seed_and_index():
    grid = TimeGrid.uniform(8)
    small = sample_paths(grid, 1, 100, 5).values
    large = sample_paths(grid, 1, PATH_BLOCK_SIZE + 10, 5).values
    np.testing.assert_array_equal(small, large[:100])
