"""
Seeded path streams and blockwise parallel evaluation.

Path indices are cut into fixed blocks of PATH_BLOCK_SIZE. Block b draws its
normals from a Philox stream keyed by (seed, b), so the bits of path i depend
only on (seed, i, grid shape) and never on the worker count. Per-path results
are concatenated in index order before any reduction.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Tuple

import numpy as np

from wienervar.core.exceptions import ConfigurationError
from wienervar.core.runtime import get_thread_count

logger = logging.getLogger(__name__)

PATH_BLOCK_SIZE = 4096


def block_ranges(n_paths: int) -> List[Tuple[int, int, int]]:
    """(block index, start, stop) triples covering range(n_paths)."""
    if n_paths < 1:
        raise ConfigurationError("n_paths must be a positive integer", n_paths=n_paths)
    return [
        (b, start, min(start + PATH_BLOCK_SIZE, n_paths))
        for b, start in enumerate(range(0, n_paths, PATH_BLOCK_SIZE))
    ]


def block_generator(seed: int, block: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for one path block; `stream` separates independent uses of one seed."""
    if seed < 0:
        raise ConfigurationError("seed must be a nonnegative integer", seed=seed)
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(stream, block))
    return np.random.Generator(np.random.Philox(sequence))


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic child seed, e.g. one per optimizer iteration."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def map_blocks(n_paths: int, fn: Callable[[int, int, int], np.ndarray]) -> np.ndarray:
    """
    Evaluate fn(block, start, stop) on every block and concatenate in path order.

    fn must return an array whose first axis has length stop - start.
    """
    ranges = block_ranges(n_paths)
    workers = min(get_thread_count(), len(ranges))
    if workers <= 1:
        parts = [fn(b, start, stop) for b, start, stop in ranges]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda r: fn(*r), ranges))
    return np.concatenate(parts, axis=0)
