"""
Control classes: evaluation of simple drifts, the A-norm, parameterized
families and the two conjugate-drift constructions

    ṽ:  ξ̃_k(w) = ξ_k(w − ∫_0^· ṽ_s(w) ds)   so that T^v ∘ T^{−ṽ} = id,
    v̄:  ξ̄_k(w) = ξ_k(w + ∫_0^· v̄_s(w) ds)   so that T^{v̄} ∘ T^{−v} = id.

Both recursions run forward interval by interval; feedback only reads the
past, so each level is determined by the levels before it.
"""

import logging
from functools import partial
from typing import List, Optional

import numpy as np

from wienervar.core.exceptions import ConfigurationError
from wienervar.core.statistics import mean_estimate
from wienervar.models.drift import SimpleDrift
from wienervar.models.grid import PathBatch, TimeGrid, WienerPath, KNOT_TOLERANCE, grid_for
from wienervar.schemas.drift import DriftFamily
from wienervar.schemas.estimate import ANormSq
from wienervar.services.wiener_core import map_path_blocks

logger = logging.getLogger(__name__)


def evaluate_drift(v: SimpleDrift, path: WienerPath, interval_index: int) -> np.ndarray:
    """ξ_k applied to the path's past at the interval's left knot."""
    return v.level(interval_index, path.grid, path.values[None, :, :])[0]


def drift_levels(v: SimpleDrift, batch: PathBatch) -> np.ndarray:
    return v.levels(batch.grid, batch.values)


def a_norm_sq(v: SimpleDrift, n_paths: int, seed: int, grid: Optional[TimeGrid] = None) -> ANormSq:
    """Monte Carlo of E[∫_0^1 |v_s|² ds], left-point quadrature."""
    grid = grid or grid_for()

    def energy(batch: PathBatch) -> np.ndarray:
        on_grid = v.on_grid(batch.grid, batch.values)
        return np.sum(np.sum(on_grid ** 2, axis=2) * batch.grid.dt[None, :], axis=1)

    estimate = mean_estimate(map_path_blocks(grid, v.dimension, n_paths, seed, energy), seed)
    return ANormSq(value=max(estimate.value, 0.0), stderr=estimate.stderr, n_samples=estimate.n_samples, seed=seed)


# ---- conjugate drifts ------------------------------------------------------

def _knot_positions(times: np.ndarray, knots: np.ndarray) -> np.ndarray:
    pos = np.searchsorted(times, knots - KNOT_TOLERANCE)
    pos = np.minimum(pos, times.size - 1)
    if np.any(np.abs(times[pos] - knots) > KNOT_TOLERANCE):
        raise ConfigurationError("drift knots are not grid knots")
    return pos


def _conjugate_levels(base: SimpleDrift, sign: int, times: np.ndarray, values: np.ndarray, upto: int) -> np.ndarray:
    """
    Levels 0..upto of the conjugate of `base` on paths known at `times`.

    The running shift ∫_0^t (conjugate) ds is accumulated on the grid steps of
    each interval as soon as that interval's level is known. Only knots
    t_0..t_upto are looked up, so `times` may stop at t_upto when this runs
    as a feedback rule.
    """
    n, n_times, d = values.shape
    pos = _knot_positions(times, base.knots[: upto + 1])
    dt = np.diff(times)
    levels = np.empty((n, upto + 1, d))
    shift = np.zeros((n, n_times, d))
    for k in range(upto + 1):
        i = pos[k]
        past = values[:, : i + 1, :] + sign * shift[:, : i + 1, :]
        levels[:, k, :] = base._finish(base.feedbacks[k](times[: i + 1], past), k)
        if k < upto:
            j = pos[k + 1]
            steps = levels[:, k, None, :] * dt[None, i:j, None]
            shift[:, i + 1 : j + 1, :] = shift[:, i, None, :] + np.cumsum(steps, axis=1)
    return levels


def _conjugate_feedback(base: SimpleDrift, sign: int, k: int, times: np.ndarray, past: np.ndarray) -> np.ndarray:
    return _conjugate_levels(base, sign, times, past, upto=k)[:, k, :]


def _conjugate_sweep(base: SimpleDrift, sign: int, grid: TimeGrid, values: np.ndarray) -> np.ndarray:
    return _conjugate_levels(base, sign, grid.knots, values, upto=base.n_intervals - 1)


def _conjugate(v: SimpleDrift, sign: int, label: str) -> SimpleDrift:
    return SimpleDrift(
        knots=v.knots,
        feedbacks=tuple(partial(_conjugate_feedback, v, sign, k) for k in range(v.n_intervals)),
        dimension=v.dimension,
        declared_bound=v.declared_bound,
        label=label,
        sweep=partial(_conjugate_sweep, v, sign),
    )


def tilde_conjugate(v: SimpleDrift) -> SimpleDrift:
    """ṽ with T^v(T^{−ṽ}(w)) = w at every knot."""
    return _conjugate(v, -1, f"tilde({v.label})")


def bar_conjugate(v: SimpleDrift) -> SimpleDrift:
    """v̄ with v(w) = v̄(T^{−v}(w)) and T^{v̄}(T^{−v}(w)) = w at every knot."""
    return _conjugate(v, 1, f"bar({v.label})")


# ---- drift families -----------------------------------------------------------

def family_bounds(family: DriftFamily):
    n = family.n_params
    low = np.broadcast_to(np.asarray(family.lower, dtype=float), (n,)).copy()
    high = np.broadcast_to(np.asarray(family.upper, dtype=float), (n,)).copy()
    if np.any(low > high):
        raise ConfigurationError("family box has lower > upper")
    return low, high


def clip_theta(family: DriftFamily, theta) -> np.ndarray:
    low, high = family_bounds(family)
    return np.clip(np.asarray(theta, dtype=float), low, high)


def family_initial_theta(family: DriftFamily) -> np.ndarray:
    if family.theta is not None:
        return clip_theta(family, family.theta)
    return clip_theta(family, np.zeros(family.n_params))


def instantiate_family(family: DriftFamily, theta) -> SimpleDrift:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (family.n_params,):
        raise ConfigurationError("theta has the wrong length", expected=family.n_params, got=int(theta.size))
    low, high = family_bounds(family)
    if np.any(theta < low - 1e-12) or np.any(theta > high + 1e-12):
        raise ConfigurationError("theta lies outside the family box")
    d, m = family.dimension, family.n_intervals
    if family.kind == "constant":
        drift = SimpleDrift.piecewise_constant(family.knots, np.tile(theta, (m, 1)), label="constant")
    elif family.kind == "piecewise-constant":
        drift = SimpleDrift.piecewise_constant(family.knots, theta.reshape(m, d), label="piecewise-constant")
    else:
        params = theta.reshape(m, d + 1)
        drift = SimpleDrift.linear_feedback(
            family.knots,
            intercepts=params[:, :d],
            slopes=params[:, d],
            declared_bound=family.clamp_bound,
            clamp=family.clamp_bound is not None,
        )
    if family.clamp_bound is not None and family.kind != "linear-state-feedback":
        drift = SimpleDrift(
            knots=drift.knots,
            feedbacks=drift.feedbacks,
            dimension=drift.dimension,
            declared_bound=family.clamp_bound,
            clamp=True,
            label=drift.label,
        )
    return drift


def random_family_drifts(family: DriftFamily, count: int, seed: int) -> List[SimpleDrift]:
    """`count` drifts with θ uniform in the family box."""
    low, high = family_bounds(family)
    rng = np.random.Generator(np.random.Philox(seed))
    return [instantiate_family(family, rng.uniform(low, high)) for _ in range(count)]
