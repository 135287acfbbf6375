"""
One-dimensional potentials V for the tilted law e^{−V}·N(0, σ²)/Z, and the
region where V fails to be convex.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from wienervar.core.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

ScalarFn = Callable[[np.ndarray], np.ndarray]

FLOOR_TOLERANCE = 1e-12
FD_STEP = 1e-5
FD_RTOL = 1e-4


@dataclass(frozen=True, eq=False)
class Potential1D:
    """
    C² potential with exact first and second derivatives.

    linear_floor (a, b) declares V(x) ≥ ax + b on all of R; it is checked on
    a dense sample of [−R, R] and bounds the Gaussian tails outside.
    """
    V: ScalarFn
    dV: ScalarFn
    d2V: ScalarFn
    sigma: float = 1.0
    linear_floor: Optional[Tuple[float, float]] = None
    half_width: Optional[float] = None
    label: str = "V"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigurationError("sigma must be positive", sigma=self.sigma)
        if self.half_width is None:
            from wienervar.core.config import settings

            object.__setattr__(self, "half_width", settings.DOMAIN_HALF_WIDTH_SIGMAS * self.sigma)
        if not self.half_width > 0:
            raise ConfigurationError("domain half-width must be positive", half_width=self.half_width)
        xs = self.sample()
        with np.errstate(all="ignore"):
            values = [np.asarray(fn(xs), dtype=float) for fn in (self.V, self.dV, self.d2V)]
        if not all(np.all(np.isfinite(v)) for v in values):
            raise ConfigurationError("V and its derivatives must be finite on [-R, R]", potential=self.label)
        if self.linear_floor is not None:
            a, b = self.linear_floor
            gap = values[0] - (a * xs + b)
            if np.min(gap) < -FLOOR_TOLERANCE * max(1.0, float(np.max(np.abs(values[0])))):
                raise ConfigurationError(
                    "declared linear floor V(x) >= ax + b fails",
                    potential=self.label,
                    x=float(xs[int(np.argmin(gap))]),
                )

    def sample(self, n: int = 8193) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, n)

    # ---- constructors -------------------------------------------------

    @classmethod
    def polynomial(
        cls,
        coefficients: Sequence[float],
        sigma: float = 1.0,
        floor="auto",
        half_width: Optional[float] = None,
        label: Optional[str] = None,
    ) -> "Potential1D":
        """V(x) = Σ c_k x^k, coefficients in ascending order; floor 'auto' derives one when it exists."""
        poly = Polynomial(np.asarray(coefficients, dtype=float)).trim()
        if floor == "auto":
            floor = polynomial_floor(poly)
        elif floor == "none":
            floor = None
        return cls(
            V=poly,
            dV=poly.deriv(1),
            d2V=poly.deriv(2),
            sigma=sigma,
            linear_floor=None if floor is None else (float(floor[0]), float(floor[1])),
            half_width=half_width,
            label=label or f"poly{[float(c) for c in poly.coef]}",
        )

    @classmethod
    def double_well(cls, alpha: float, beta: float, sigma: float = 1.0, half_width: Optional[float] = None):
        """V(x) = ½α²x⁴ − ½βx²."""
        if alpha <= 0 or beta <= 0:
            raise ConfigurationError("double well needs alpha, beta > 0", alpha=alpha, beta=beta)
        return cls.polynomial(
            [0.0, 0.0, -0.5 * beta, 0.0, 0.5 * alpha ** 2],
            sigma=sigma,
            half_width=half_width,
            label=f"double_well(alpha={alpha}, beta={beta})",
        )

    @classmethod
    def from_callables(
        cls,
        V: ScalarFn,
        dV: ScalarFn,
        d2V: ScalarFn,
        sigma: float = 1.0,
        linear_floor: Optional[Tuple[float, float]] = None,
        half_width: Optional[float] = None,
        label: str = "V",
    ) -> "Potential1D":
        """User-supplied triple, guarded by a central finite-difference cross-check."""
        potential = cls(V, dV, d2V, sigma=sigma, linear_floor=linear_floor, half_width=half_width, label=label)
        xs = potential.sample(65)
        for name, fn, deriv in (("V'", V, dV), ("V''", dV, d2V)):
            numeric = (fn(xs + FD_STEP) - fn(xs - FD_STEP)) / (2.0 * FD_STEP)
            exact = np.asarray(deriv(xs), dtype=float)
            if np.any(np.abs(numeric - exact) > FD_RTOL * np.maximum(1.0, np.abs(exact))):
                raise ConfigurationError(f"{name} disagrees with a finite difference of its antiderivative", potential=label)
        return potential


def polynomial_floor(poly: Polynomial) -> Optional[Tuple[float, float]]:
    """
    A linear floor for a polynomial: V itself when deg V ≤ 1, the constant
    global minimum for even degree with positive leading coefficient.
    """
    coef = poly.coef
    degree = poly.degree()
    if degree <= 1:
        return (float(coef[1]) if coef.size > 1 else 0.0, float(coef[0]))
    if degree % 2 == 0 and coef[-1] > 0:
        critical = poly.deriv().roots()
        real = critical[np.abs(critical.imag) < 1e-9].real
        minimum = float(np.min(poly(real))) if real.size else float(poly(0.0))
        # roots are approximate; shave the floor so it stays below V
        return (0.0, minimum - 1e-12 * max(1.0, abs(minimum)))
    logger.warning(f"No linear floor exists for {poly}; tails outside [-R, R] are uncertified")
    return None


@dataclass(frozen=True)
class NonconvexRegion:
    """Closed intervals of [−R, R] where V'' ≤ 0, sorted and disjoint."""
    intervals: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return not self.intervals

    def contains(self, x: float) -> bool:
        return any(lo <= x <= hi for lo, hi in self.intervals)
