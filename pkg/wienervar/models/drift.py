"""
Simple adapted drifts: v_t = ξ_k(w(s), s ≤ t_k) for t_k < t ≤ t_{k+1}.

A feedback rule receives the knot times up to t_k and the batch of path
values at those knots, shape (n, j+1, d), and returns one d-vector per path.
It never sees values after t_k.
"""

from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from wienervar.core.exceptions import ConfigurationError, EvaluationError
from wienervar.models.grid import TimeGrid

Feedback = Callable[[np.ndarray, np.ndarray], np.ndarray]
Sweep = Callable[[TimeGrid, np.ndarray], np.ndarray]


def _constant_rule(level: np.ndarray, times: np.ndarray, past: np.ndarray) -> np.ndarray:
    return np.broadcast_to(level, (past.shape[0], level.size)).copy()


def _linear_rule(intercept: np.ndarray, slope: float, times: np.ndarray, past: np.ndarray) -> np.ndarray:
    return intercept[None, :] + slope * past[:, -1, :]


@dataclass(frozen=True, eq=False)
class SimpleDrift:
    knots: np.ndarray
    feedbacks: Tuple[Feedback, ...]
    dimension: int = 1
    declared_bound: Optional[float] = None
    clamp: bool = False
    label: str = "drift"
    # Optional one-pass rule returning all levels (n, m, d); must agree with feedbacks
    sweep: Optional[Sweep] = None

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        if knots.ndim != 1 or knots.size < 2 or knots[0] != 0.0 or knots[-1] != 1.0:
            raise ConfigurationError("drift knots must run from 0 to 1", knots=knots.tolist())
        if not np.all(np.diff(knots) > 0):
            raise ConfigurationError("drift knots must be strictly increasing")
        if len(self.feedbacks) != knots.size - 1:
            raise ConfigurationError(
                "one feedback rule per drift interval is required",
                n_intervals=knots.size - 1,
                n_feedbacks=len(self.feedbacks),
            )
        if self.declared_bound is not None and self.declared_bound <= 0:
            raise ConfigurationError("declared_bound must be positive", declared_bound=self.declared_bound)
        if self.clamp and self.declared_bound is None:
            raise ConfigurationError("clamping needs a declared_bound")
        knots.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "feedbacks", tuple(self.feedbacks))

    # ---- constructors -------------------------------------------------

    @classmethod
    def constant(cls, level, dimension: int = 1, label: str = None) -> "SimpleDrift":
        level = np.broadcast_to(np.asarray(level, dtype=float), (dimension,)).copy()
        bound = float(np.linalg.norm(level)) or None
        return cls(
            knots=np.array([0.0, 1.0]),
            feedbacks=(partial(_constant_rule, level),),
            dimension=dimension,
            declared_bound=bound,
            label=label or f"constant{level.tolist()}",
        )

    @classmethod
    def piecewise_constant(cls, knots: Sequence[float], levels, label: str = None) -> "SimpleDrift":
        levels = np.asarray(levels, dtype=float)
        if levels.ndim == 1:
            levels = levels[:, None]
        bound = float(np.max(np.linalg.norm(levels, axis=1))) or None
        return cls(
            knots=np.asarray(knots, dtype=float),
            feedbacks=tuple(partial(_constant_rule, row.copy()) for row in levels),
            dimension=levels.shape[1],
            declared_bound=bound,
            label=label or "piecewise-constant",
        )

    @classmethod
    def linear_feedback(
        cls,
        knots: Sequence[float],
        intercepts,
        slopes: Sequence[float],
        declared_bound: Optional[float] = None,
        clamp: bool = False,
        label: str = None,
    ) -> "SimpleDrift":
        """v_t = θ_k,0 + θ_k,1·w(t_k) on (t_k, t_{k+1}]."""
        intercepts = np.asarray(intercepts, dtype=float)
        if intercepts.ndim == 1:
            intercepts = intercepts[:, None]
        slopes = np.asarray(slopes, dtype=float)
        return cls(
            knots=np.asarray(knots, dtype=float),
            feedbacks=tuple(
                partial(_linear_rule, intercepts[k].copy(), float(slopes[k])) for k in range(len(slopes))
            ),
            dimension=intercepts.shape[1],
            declared_bound=declared_bound,
            clamp=clamp,
            label=label or "linear-state-feedback",
        )

    # ---- evaluation ---------------------------------------------------

    @property
    def n_intervals(self) -> int:
        return self.knots.size - 1

    def knot_indices(self, grid: TimeGrid) -> np.ndarray:
        """Grid indices of the drift knots; misaligned knots are a configuration error."""
        return grid.indices_of(self.knots)

    def _finish(self, raw: np.ndarray, k: int) -> np.ndarray:
        out = np.asarray(raw, dtype=float).reshape(-1, self.dimension)
        if not np.all(np.isfinite(out)):
            bad = np.flatnonzero(~np.all(np.isfinite(out), axis=1))
            raise EvaluationError(
                "feedback produced a non-finite value",
                drift=self.label,
                interval=k,
                first_path_index=int(bad[0]),
            )
        if self.clamp:
            norms = np.linalg.norm(out, axis=1)
            scale = np.where(norms > self.declared_bound, self.declared_bound / np.maximum(norms, 1e-300), 1.0)
            out = out * scale[:, None]
        return out

    def level(self, k: int, grid: TimeGrid, values: np.ndarray) -> np.ndarray:
        """ξ_k applied to the past of each path at knot t_k; shape (n, d)."""
        if not 0 <= k < self.n_intervals:
            raise ConfigurationError("interval index out of range", interval=k, n_intervals=self.n_intervals)
        stop = grid.index_of(self.knots[k]) + 1
        return self._finish(self.feedbacks[k](grid.knots[:stop], values[:, :stop, :]), k)

    def levels(self, grid: TimeGrid, values: np.ndarray) -> np.ndarray:
        """All interval levels, shape (n, m, d)."""
        self.knot_indices(grid)
        if self.sweep is not None:
            raw = np.asarray(self.sweep(grid, values), dtype=float)
            return np.stack([self._finish(raw[:, k, :], k) for k in range(self.n_intervals)], axis=1)
        return np.stack([self.level(k, grid, values) for k in range(self.n_intervals)], axis=1)

    def interval_of_steps(self, grid: TimeGrid) -> np.ndarray:
        """Drift interval index owning each grid step."""
        idx = self.knot_indices(grid)
        return np.searchsorted(idx, np.arange(grid.n_steps), side="right") - 1

    def on_grid(self, grid: TimeGrid, values: np.ndarray) -> np.ndarray:
        """Drift value on every grid step, shape (n, n_steps, d)."""
        return self.expand(grid, self.levels(grid, values))

    def expand(self, grid: TimeGrid, levels: np.ndarray) -> np.ndarray:
        return np.take(levels, self.interval_of_steps(grid), axis=1)
