"""
Discretized Wiener-space values: time grids, paths, Cameron–Martin paths and
Doléans weights.

Paths are stored densely at every knot, values[..., k, :] being the state at
knots[k]. All types are immutable after construction.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from wienervar.core.exceptions import ConfigurationError

KNOT_TOLERANCE = 1e-12


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Knots 0 = t_0 < ... < t_n = 1 on the unit horizon."""
    knots: np.ndarray

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        if knots.ndim != 1 or knots.size < 2:
            raise ConfigurationError("a time grid needs at least one step", n_knots=int(knots.size))
        if knots[0] != 0.0 or knots[-1] != 1.0:
            raise ConfigurationError(
                "time grid must start at 0 and end at 1",
                first=float(knots[0]),
                last=float(knots[-1]),
            )
        if not np.all(np.diff(knots) > 0):
            raise ConfigurationError("time grid knots must be strictly increasing")
        object.__setattr__(self, "knots", _frozen(knots))

    @classmethod
    def uniform(cls, n_steps: int) -> "TimeGrid":
        if int(n_steps) != n_steps or n_steps < 1:
            raise ConfigurationError("n_steps must be a positive integer", n_steps=n_steps)
        knots = np.linspace(0.0, 1.0, int(n_steps) + 1)
        knots[-1] = 1.0
        return cls(knots)

    @property
    def n_steps(self) -> int:
        return self.knots.size - 1

    @property
    def n_knots(self) -> int:
        return self.knots.size

    @property
    def dt(self) -> np.ndarray:
        return np.diff(self.knots)

    def index_of(self, t: float) -> int:
        """Index of the knot equal to t; ConfigurationError if t is not a knot."""
        k = int(np.argmin(np.abs(self.knots - t)))
        if abs(self.knots[k] - t) > KNOT_TOLERANCE:
            raise ConfigurationError("time is not a grid knot", t=float(t), n_steps=self.n_steps)
        return k

    def indices_of(self, times) -> np.ndarray:
        return np.array([self.index_of(t) for t in np.asarray(times, dtype=float)], dtype=int)

    def same_as(self, other: "TimeGrid") -> bool:
        return self.knots.shape == other.knots.shape and bool(np.all(self.knots == other.knots))


@dataclass(frozen=True, eq=False)
class WienerPath:
    """One d-dimensional path sampled at every grid knot, vanishing at 0."""
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] != self.grid.n_knots:
            raise ConfigurationError(
                "path values must have one d-vector per knot",
                shape=list(values.shape),
                n_knots=self.grid.n_knots,
            )
        if np.any(values[0] != 0.0):
            raise ConfigurationError("paths must vanish at the origin")
        object.__setattr__(self, "values", _frozen(values))

    @property
    def dimension(self) -> int:
        return self.values.shape[1]

    def at(self, t: float) -> np.ndarray:
        return self.values[self.grid.index_of(t)]

    def sup_norm(self) -> float:
        """|w|_W on the grid: max over knots of the Euclidean norm."""
        return float(np.max(np.linalg.norm(self.values, axis=1)))

    def as_batch(self) -> "PathBatch":
        return PathBatch(self.grid, self.values[None, :, :])


@dataclass(frozen=True, eq=False)
class PathBatch:
    """n paths on one grid, values of shape (n, n_knots, d)."""
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 3 or values.shape[1] != self.grid.n_knots:
            raise ConfigurationError(
                "batch values must have shape (n, n_knots, d)",
                shape=list(values.shape),
                n_knots=self.grid.n_knots,
            )
        object.__setattr__(self, "values", values)

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def dimension(self) -> int:
        return self.values.shape[2]

    def path(self, i: int) -> WienerPath:
        return WienerPath(self.grid, self.values[i])

    def terminal(self) -> np.ndarray:
        """Values at t = 1, shape (n, d)."""
        return self.values[:, -1, :]

    def sup_norm(self) -> np.ndarray:
        return np.max(np.linalg.norm(self.values, axis=2), axis=1)

    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=1)


@dataclass(frozen=True, eq=False)
class CameronMartinPath:
    """Element h of H with piecewise-constant derivative, one slope per grid interval."""
    grid: TimeGrid
    slopes: np.ndarray

    def __post_init__(self):
        slopes = np.asarray(self.slopes, dtype=float)
        if slopes.ndim == 1:
            slopes = slopes[:, None]
        if slopes.ndim != 2 or slopes.shape[0] != self.grid.n_steps:
            raise ConfigurationError(
                "one slope vector per grid interval is required",
                shape=list(slopes.shape),
                n_steps=self.grid.n_steps,
            )
        if not np.all(np.isfinite(slopes)):
            raise ConfigurationError("Cameron–Martin slopes must be finite")
        object.__setattr__(self, "slopes", _frozen(slopes))

    @classmethod
    def identity(cls, grid: TimeGrid, dimension: int = 1, coordinate: int = 0) -> "CameronMartinPath":
        """h(t) = t e_coordinate."""
        slopes = np.zeros((grid.n_steps, dimension))
        slopes[:, coordinate] = 1.0
        return cls(grid, slopes)

    @property
    def dimension(self) -> int:
        return self.slopes.shape[1]

    def values(self) -> np.ndarray:
        """h at every knot, shape (n_knots, d), h(0) = 0."""
        steps = self.slopes * self.grid.dt[:, None]
        return np.vstack([np.zeros((1, self.dimension)), np.cumsum(steps, axis=0)])

    def inner(self, other: "CameronMartinPath") -> float:
        """<h1, h2>_H."""
        return float(np.sum(np.sum(self.slopes * other.slopes, axis=1) * self.grid.dt))

    def norm_sq(self) -> float:
        return self.inner(self)

    def scaled(self, c: float) -> "CameronMartinPath":
        return CameronMartinPath(self.grid, c * self.slopes)

    def pairing(self, values: np.ndarray) -> np.ndarray:
        """
        Left-point Stieltjes sum Σ ḣ_k·(w(t_{k+1}) − w(t_k)) for paths of shape
        (n_knots, d) or (n, n_knots, d).
        """
        increments = np.diff(values, axis=-2)
        return np.sum(increments * self.slopes, axis=(-2, -1))


@dataclass(frozen=True)
class DoleansWeight:
    """E^v_1 = exp(∫v·dW − ½∫|v|²ds) of one path."""
    stochastic_integral: float
    energy: float
    log_value: float = field(init=False)
    value: float = field(init=False)

    def __post_init__(self):
        if self.energy < 0:
            raise ConfigurationError("drift energy must be nonnegative", energy=self.energy)
        log_value = self.stochastic_integral - 0.5 * self.energy
        object.__setattr__(self, "log_value", float(log_value))
        object.__setattr__(self, "value", float(np.exp(log_value)))


def grid_for(n_steps: Optional[int] = None) -> TimeGrid:
    """Uniform grid with the configured default step count."""
    from wienervar.core.config import settings

    return TimeGrid.uniform(n_steps or settings.DEFAULT_N_STEPS)
