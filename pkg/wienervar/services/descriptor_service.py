from typing import List, Optional

import numpy as np

from wienervar.core.exceptions import ConfigurationError
from wienervar.models.drift import SimpleDrift
from wienervar.models.functional import (
    FunctionalSpec,
    GrowthConstants,
    LinearFunctional,
    ParamFunctionalSpec,
    PsiFunction,
    make_psi,
)
from wienervar.models.grid import CameronMartinPath, TimeGrid
from wienervar.models.potential import Potential1D
from wienervar.schemas.drift import DriftFamily
from wienervar.schemas.experiment import (
    FunctionalDescriptor,
    LinearFunctionalDescriptor,
    ParamFunctionalDescriptor,
    PotentialDescriptor,
)
from wienervar.services.drift_class import family_initial_theta, instantiate_family
from wienervar.services.prekopa import conditional_slice


class DescriptorService:
    """Service for turning validated JSON descriptors into model objects"""

    def functional(self, descriptor: FunctionalDescriptor) -> FunctionalSpec:
        """
        Build F from its descriptor.

        Declared growth constants override the builder's own; delta is
        passed through unchanged.
        """
        kind = descriptor.kind
        delta = descriptor.delta
        if kind == "linear-terminal":
            spec = FunctionalSpec.linear_terminal(descriptor.c, delta)
        elif kind == "quadratic-terminal":
            spec = FunctionalSpec.quadratic_terminal(descriptor.a, delta)
        elif kind == "constant":
            spec = FunctionalSpec.constant(descriptor.b)
        elif kind == "polynomial-terminal":
            spec = FunctionalSpec.polynomial_terminal(descriptor.coefficients, delta)
        elif kind == "exp-sup-norm":
            spec = FunctionalSpec.exp_sup_norm(descriptor.coef, delta)
        elif kind == "potential-terminal":
            p = self.potential(descriptor.potential)
            spec = FunctionalSpec.potential_terminal(p.V, delta, label=f"-{p.label}(w(1))")
        elif kind == "cylinder":
            spec = FunctionalSpec.cylinder_quadratic(
                descriptor.knots, descriptor.linear, descriptor.quadratic, delta
            )
        else:
            raise ConfigurationError("unknown functional kind", kind=kind)

        if descriptor.growth is not None:
            growth = GrowthConstants(descriptor.growth.c1, descriptor.growth.alpha, descriptor.growth.c2)
            spec = FunctionalSpec(
                evaluator=spec.evaluator,
                kind=spec.kind,
                delta=spec.delta,
                upper_bound=spec.upper_bound,
                growth=growth,
                cylinder=spec.cylinder,
                terminal=spec.terminal,
                label=spec.label,
                params=spec.params,
            )
        return spec

    def param_functional(
        self, descriptor: ParamFunctionalDescriptor, grid: TimeGrid
    ) -> ParamFunctionalSpec:
        low, high = descriptor.lambda_low, descriptor.lambda_high
        if descriptor.kind == "gaussian-shift":
            return ParamFunctionalSpec.gaussian_shift(low, high)
        if descriptor.kind == "linear-tilt":
            return ParamFunctionalSpec.linear_tilt(low, high)
        if descriptor.kind == "squared-terminal":
            return ParamFunctionalSpec.squared_terminal(low, high)
        F = self.functional(descriptor.functional)
        half_width = max(abs(low), abs(high))
        return conditional_slice(F, self.linear_functional(descriptor.l, grid), half_width)

    def linear_functional(self, descriptor: LinearFunctionalDescriptor, grid: TimeGrid) -> LinearFunctional:
        """Representer slopes on the grid, scaled by `scale`."""
        d, j = descriptor.dimension, descriptor.coordinate
        slopes = np.zeros((grid.n_steps, d))
        left = grid.knots[:-1]
        if descriptor.kind == "identity":
            slopes[:, j] = 1.0
        elif descriptor.kind == "truncated":
            grid.index_of(descriptor.t_max)
            slopes[:, j] = np.where(left < descriptor.t_max - 1e-12, 1.0, 0.0)
        else:
            knots = np.asarray(descriptor.knots, dtype=float)
            grid.indices_of(knots)
            interval = np.searchsorted(knots, left, side="right") - 1
            slopes[:, j] = np.asarray(descriptor.slopes, dtype=float)[np.clip(interval, 0, len(descriptor.slopes) - 1)]
        return LinearFunctional(CameronMartinPath(grid, descriptor.scale * slopes))

    def potential(self, descriptor: PotentialDescriptor) -> Potential1D:
        if descriptor.kind == "double_well":
            return Potential1D.double_well(
                descriptor.alpha, descriptor.beta, sigma=descriptor.sigma, half_width=descriptor.half_width
            )
        floor = descriptor.floor if isinstance(descriptor.floor, str) else tuple(descriptor.floor)
        return Potential1D.polynomial(
            descriptor.coefficients, sigma=descriptor.sigma, floor=floor, half_width=descriptor.half_width
        )

    def psi_list(self, names: List[str]) -> List[PsiFunction]:
        return [make_psi(name) for name in names]

    def drift(self, family: DriftFamily, theta: Optional[List[float]] = None) -> SimpleDrift:
        """Instantiate a family at θ, its declared theta, or zeros."""
        return instantiate_family(family, family_initial_theta(family) if theta is None else theta)


descriptor_service = DescriptorService()
