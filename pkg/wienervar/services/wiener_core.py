"""
Wiener-space primitives on a discrete grid: sampling, Cameron–Martin
arithmetic, drift transforms T^v, Doléans exponentials and Girsanov
reweighting.

Stochastic integrals are left-point Itô sums throughout.
"""

import logging
import math
from typing import Callable, Optional, Tuple

import numpy as np

from wienervar.core.exceptions import ConfigurationError
from wienervar.core.parallel import block_generator, map_blocks, PATH_BLOCK_SIZE
from wienervar.core.statistics import mean_estimate
from wienervar.models.drift import SimpleDrift
from wienervar.models.functional import FunctionalSpec
from wienervar.models.grid import CameronMartinPath, DoleansWeight, PathBatch, TimeGrid, WienerPath, grid_for
from wienervar.schemas.estimate import Estimate

logger = logging.getLogger(__name__)


# ---- sampling -----------------------------------------------------------

def _check_dimension(d: int) -> None:
    if int(d) != d or d < 1:
        raise ConfigurationError("dimension must be a positive integer", dimension=d)


def _block_batch(grid: TimeGrid, d: int, seed: int, block: int, start: int, stop: int, stream: int = 0) -> PathBatch:
    rng = block_generator(seed, block, stream)
    normals = rng.standard_normal((stop - start, grid.n_steps, d))
    increments = normals * np.sqrt(grid.dt)[None, :, None]
    values = np.zeros((stop - start, grid.n_knots, d))
    values[:, 1:, :] = np.cumsum(increments, axis=1)
    return PathBatch(grid, values)


def sample_paths(grid: TimeGrid, d: int, n_paths: int, seed: int, stream: int = 0) -> PathBatch:
    """n_paths independent Brownian paths; path i depends only on (seed, i, grid, d)."""
    _check_dimension(d)
    return PathBatch(
        grid,
        map_blocks(n_paths, lambda b, start, stop: _block_batch(grid, d, seed, b, start, stop, stream).values),
    )


def sample_wiener(grid: TimeGrid, d: int, seed: int) -> WienerPath:
    """One Brownian path, deterministic given seed."""
    return sample_paths(grid, d, 1, seed).path(0)


def map_path_blocks(
    grid: TimeGrid,
    d: int,
    n_paths: int,
    seed: int,
    fn: Callable[[PathBatch], np.ndarray],
    stream: int = 0,
) -> np.ndarray:
    """
    Sample paths block by block and evaluate fn on each block in parallel.

    fn returns one row per path; rows come back in path order, so any
    reduction over the result is independent of the thread count.
    """
    _check_dimension(d)
    return map_blocks(n_paths, lambda b, start, stop: fn(_block_batch(grid, d, seed, b, start, stop, stream)))


# ---- Cameron–Martin arithmetic ---------------------------------------------

def h_norm_sq(h: CameronMartinPath) -> float:
    """|h|_H² = Σ_k |ḣ_k|² Δt_k."""
    return h.norm_sq()


def cameron_martin_shift(path: WienerPath, h: CameronMartinPath) -> WienerPath:
    if not path.grid.same_as(h.grid) or path.dimension != h.dimension:
        raise ConfigurationError("path and Cameron–Martin shift must share grid and dimension")
    return WienerPath(path.grid, path.values + h.values())


# ---- drift transforms --------------------------------------------------------

def integrate_steps(grid: TimeGrid, on_grid: np.ndarray) -> np.ndarray:
    """∫_0^{t_k} v ds at every knot from step values (n, n_steps, d); shape (n, n_knots, d)."""
    n, _, d = on_grid.shape
    out = np.zeros((n, grid.n_knots, d))
    out[:, 1:, :] = np.cumsum(on_grid * grid.dt[None, :, None], axis=1)
    return out


def _check_compatible(grid: TimeGrid, d: int, v: SimpleDrift) -> None:
    if v.dimension != d:
        raise ConfigurationError("drift and path dimensions differ", drift=v.dimension, path=d)
    v.knot_indices(grid)


def transform_batch(batch: PathBatch, v: SimpleDrift, sign: int = 1) -> PathBatch:
    """T^{±v}: w ↦ w ± ∫_0^· v_s(w) ds, feedback reading the input path."""
    if sign not in (1, -1):
        raise ConfigurationError("sign must be +1 or -1", sign=sign)
    _check_compatible(batch.grid, batch.dimension, v)
    drift = integrate_steps(batch.grid, v.on_grid(batch.grid, batch.values))
    return PathBatch(batch.grid, batch.values + sign * drift)


def apply_drift_transform(path: WienerPath, v: SimpleDrift, sign: int = 1) -> WienerPath:
    return transform_batch(path.as_batch(), v, sign).path(0)


# ---- Doléans exponentials ------------------------------------------------------

def doleans_terms(batch: PathBatch, v: SimpleDrift) -> Tuple[np.ndarray, np.ndarray]:
    """(∫v·dW, ∫|v|²ds) per path, left-point sums."""
    _check_compatible(batch.grid, batch.dimension, v)
    on_grid = v.on_grid(batch.grid, batch.values)
    stochastic_integral = np.sum(on_grid * batch.increments(), axis=(1, 2))
    energy = np.sum(np.sum(on_grid ** 2, axis=2) * batch.grid.dt[None, :], axis=1)
    return stochastic_integral, energy


def doleans_log_weight(batch: PathBatch, v: SimpleDrift) -> np.ndarray:
    stochastic_integral, energy = doleans_terms(batch, v)
    return stochastic_integral - 0.5 * energy


def doleans_exponential(path: WienerPath, v: SimpleDrift) -> DoleansWeight:
    stochastic_integral, energy = doleans_terms(path.as_batch(), v)
    return DoleansWeight(stochastic_integral=float(stochastic_integral[0]), energy=float(energy[0]))


def mean_doleans_weight(
    v: SimpleDrift,
    n_paths: int,
    seed: int,
    grid: Optional[TimeGrid] = None,
) -> Estimate:
    """Monte Carlo of E[E^v_1]; equals 1 for bounded v."""
    grid = grid or grid_for()
    samples = map_path_blocks(grid, v.dimension, n_paths, seed, lambda b: np.exp(doleans_log_weight(b, v)))
    return mean_estimate(samples, seed)


def doleans_moment(
    v: SimpleDrift,
    p: float,
    n_paths: int,
    seed: int,
    grid: Optional[TimeGrid] = None,
) -> Tuple[Estimate, Optional[float]]:
    """
    Monte Carlo of E[(E^v_1)^p] together with exp(½p(p−1)K²) when v declares
    the bound K.
    """
    grid = grid or grid_for()
    samples = map_path_blocks(grid, v.dimension, n_paths, seed, lambda b: np.exp(p * doleans_log_weight(b, v)))
    bound = None
    if v.declared_bound is not None:
        bound = math.exp(0.5 * p * (p - 1.0) * v.declared_bound ** 2)
    return mean_estimate(samples, seed), bound


# ---- Girsanov reweighting ----------------------------------------------------

def girsanov_reweighted_mean(
    F: FunctionalSpec,
    v: SimpleDrift,
    n_paths: int,
    seed: int,
    grid: Optional[TimeGrid] = None,
) -> Estimate:
    """Monte Carlo of E[E^v_1(W)·F(T^{−v}(W))], an estimator of E[F(W)]."""
    grid = grid or grid_for()

    def block(batch: PathBatch) -> np.ndarray:
        weight = np.exp(doleans_log_weight(batch, v))
        return weight * F.evaluate_batch(transform_batch(batch, v, sign=-1))

    return mean_estimate(map_path_blocks(grid, v.dimension, n_paths, seed, block), seed)


def plain_mean(F: FunctionalSpec, n_paths: int, seed: int, grid: Optional[TimeGrid] = None, d: int = 1) -> Estimate:
    """Monte Carlo of E[F(W)]."""
    grid = grid or grid_for()
    return mean_estimate(map_path_blocks(grid, d, n_paths, seed, F.evaluate_batch), seed)


__all__ = [
    "PATH_BLOCK_SIZE",
    "sample_paths",
    "sample_wiener",
    "map_path_blocks",
    "h_norm_sq",
    "cameron_martin_shift",
    "integrate_steps",
    "transform_batch",
    "apply_drift_transform",
    "doleans_terms",
    "doleans_log_weight",
    "doleans_exponential",
    "mean_doleans_weight",
    "doleans_moment",
    "girsanov_reweighted_mean",
    "plain_mean",
]
