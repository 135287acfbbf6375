"""
Path functionals F(w), parameterized functionals G(w, λ), elements of W*
represented in H, and convex test functions ψ.

Evaluators act on whole batches: they receive a PathBatch and return one
real per path. A value of -inf is a declared rejection of the path.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Sequence

import numpy as np

from wienervar.core.exceptions import ConfigurationError, DomainError, EvaluationError
from wienervar.models.grid import CameronMartinPath, PathBatch, WienerPath

FUNCTIONAL_KINDS = ("linear-terminal", "quadratic-terminal", "cylinder", "potential-terminal", "custom")


@dataclass(frozen=True)
class GrowthConstants:
    """log(1 + F₋(w)) ≤ C₂(1 + |w|_W^α) + C₁|w|_W² with C₁ < ½ and α < 2."""
    c1: float
    alpha: float
    c2: float

    def __post_init__(self):
        if not (0 <= self.c1 < 0.5):
            raise ConfigurationError("growth constant C1 must lie in [0, 1/2)", c1=self.c1)
        if not (0 <= self.alpha < 2):
            raise ConfigurationError("growth exponent alpha must lie in [0, 2)", alpha=self.alpha)
        if self.c2 < 0:
            raise ConfigurationError("growth constant C2 must be nonnegative", c2=self.c2)

    def bound(self, sup_norm: np.ndarray) -> np.ndarray:
        return self.c2 * (1.0 + sup_norm ** self.alpha) + self.c1 * sup_norm ** 2


@dataclass(frozen=True)
class CylinderData:
    """F(w) = f(w(t_1), ..., w(t_m)) for one-dimensional paths."""
    knots: np.ndarray
    f: Callable[[np.ndarray], np.ndarray]
    grad_f: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class FunctionalSpec:
    evaluator: Callable[[PathBatch], np.ndarray]
    kind: str = "custom"
    delta: Optional[float] = None
    upper_bound: Optional[float] = None
    growth: Optional[GrowthConstants] = None
    cylinder: Optional[CylinderData] = None
    # F(w) = terminal(w(1)) for one-dimensional terminal functionals
    terminal: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = "F"
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in FUNCTIONAL_KINDS:
            raise ConfigurationError("unknown functional kind", kind=self.kind)
        if self.delta is not None and self.delta <= 0:
            raise ConfigurationError("the integrability exponent delta must be positive", delta=self.delta)
        if self.kind == "cylinder" and self.cylinder is None:
            raise ConfigurationError("cylinder functionals need knots, f and its gradient")

    def evaluate_batch(self, batch: PathBatch) -> np.ndarray:
        out = np.asarray(self.evaluator(batch), dtype=float).reshape(batch.n_paths)
        invalid = np.isnan(out) | (out == np.inf)
        if np.any(invalid):
            bad = np.flatnonzero(invalid)
            raise EvaluationError(
                "functional returned an invalid value",
                functional=self.label,
                first_path_index=int(bad[0]),
                count=int(bad.size),
            )
        return out

    def evaluate(self, path: WienerPath) -> float:
        return float(self.evaluate_batch(path.as_batch())[0])

    # ---- builders -------------------------------------------------------

    @classmethod
    def linear_terminal(cls, c: float, delta: Optional[float] = 1.0) -> "FunctionalSpec":
        """F(w) = c·w(1), first coordinate."""
        return cls(
            evaluator=lambda b: c * b.values[:, -1, 0],
            kind="linear-terminal",
            delta=delta,
            terminal=lambda x: c * x,
            label=f"{c}*w(1)",
            params={"c": c},
        )

    @classmethod
    def quadratic_terminal(cls, a: float, delta: Optional[float] = 1.0) -> "FunctionalSpec":
        """F(w) = a·|w(1)|²."""
        return cls(
            evaluator=lambda b: a * np.sum(b.values[:, -1, :] ** 2, axis=1),
            kind="quadratic-terminal",
            delta=delta,
            terminal=lambda x: a * x ** 2,
            upper_bound=0.0 if a <= 0 else None,
            label=f"{a}*w(1)^2",
            params={"a": a},
        )

    @classmethod
    def constant(cls, b: float) -> "FunctionalSpec":
        return cls(
            evaluator=lambda batch: np.full(batch.n_paths, float(b)),
            kind="custom",
            delta=1.0,
            upper_bound=float(b),
            growth=GrowthConstants(c1=0.0, alpha=0.0, c2=float(np.log1p(max(-b, 0.0)))),
            terminal=lambda x: np.full(np.shape(x), float(b)),
            label=f"const {b}",
            params={"b": b},
        )

    @classmethod
    def potential_terminal(
        cls,
        potential: Callable[[np.ndarray], np.ndarray],
        delta: Optional[float] = 1.0,
        upper_bound: Optional[float] = None,
        label: str = "-V(w(1))",
        params: Optional[Dict[str, Any]] = None,
    ) -> "FunctionalSpec":
        """F(w) = −V(w(1)), first coordinate."""
        return cls(
            evaluator=lambda b: -potential(b.values[:, -1, 0]),
            kind="potential-terminal",
            delta=delta,
            terminal=lambda x: -potential(x),
            upper_bound=upper_bound,
            label=label,
            params=params or {},
        )

    @classmethod
    def polynomial_terminal(
        cls,
        coefficients: Sequence[float],
        delta: Optional[float] = 1.0,
        growth: Optional[GrowthConstants] = None,
    ) -> "FunctionalSpec":
        """F(w) = Σ c_k w(1)^k, coefficients ascending, first coordinate."""
        poly = np.polynomial.Polynomial(np.asarray(coefficients, dtype=float))
        leading = poly.coef[-1]
        bounded_above = poly.degree() == 0 or (poly.degree() % 2 == 0 and leading < 0)
        return cls(
            evaluator=lambda b: poly(b.values[:, -1, 0]),
            kind="custom",
            delta=delta,
            upper_bound=float(np.max(poly(np.append(poly.deriv().roots().real, 0.0)))) if bounded_above else None,
            growth=growth,
            terminal=poly,
            label=f"poly{[float(c) for c in poly.coef]}(w(1))",
            params={"coefficients": [float(c) for c in poly.coef]},
        )

    @classmethod
    def exp_sup_norm(cls, coef: float = 1.0, delta: Optional[float] = 1.0) -> "FunctionalSpec":
        """
        F(w) = −coef·exp(|w|_W) with growth constants C₁ = 0, α = 1 and
        C₂ = max(1, log(1 + coef)).

        log(1 + coef·e^x) ≤ log(1 + coef) + x, so C₂(1 + x) bounds it once
        C₂ ≥ 1 and C₂ ≥ log(1 + coef). For coef ≤ 1 this is C₂ = 1.
        """
        if coef <= 0:
            raise ConfigurationError("exp_sup_norm needs a positive coefficient", coef=coef)
        return cls(
            evaluator=lambda b: -coef * np.exp(b.sup_norm()),
            kind="custom",
            delta=delta,
            upper_bound=0.0,
            growth=GrowthConstants(c1=0.0, alpha=1.0, c2=max(1.0, float(np.log1p(coef)))),
            label=f"-{coef}*exp(|w|)",
            params={"coef": coef},
        )

    @classmethod
    def cylinder_quadratic(
        cls,
        knots: Sequence[float],
        linear: Sequence[float],
        quadratic: Sequence[float],
        delta: Optional[float] = 1.0,
    ) -> "FunctionalSpec":
        """f(x) = Σ_j (b_j x_j + a_j x_j²) at the given knots."""
        b = np.asarray(linear, dtype=float)
        a = np.asarray(quadratic, dtype=float)
        if b.shape != a.shape or b.size != len(knots):
            raise ConfigurationError("one linear and one quadratic coefficient per knot are required")
        return cls.cylinder_functional(
            knots,
            f=lambda x: np.sum(b * x + a * x ** 2, axis=-1),
            grad_f=lambda x: b + 2.0 * a * x,
            delta=delta,
            label=f"cylinder(b={b.tolist()}, a={a.tolist()})",
            params={"knots": list(map(float, knots)), "linear": b.tolist(), "quadratic": a.tolist()},
        )

    @classmethod
    def cylinder_functional(
        cls,
        knots: Sequence[float],
        f: Callable[[np.ndarray], np.ndarray],
        grad_f: Callable[[np.ndarray], np.ndarray],
        delta: Optional[float] = 1.0,
        label: str = "f(w(t_1),...,w(t_m))",
        params: Optional[Dict[str, Any]] = None,
    ) -> "FunctionalSpec":
        knots = np.asarray(knots, dtype=float)
        data = CylinderData(knots=knots, f=f, grad_f=grad_f)

        def evaluator(batch: PathBatch) -> np.ndarray:
            idx = batch.grid.indices_of(knots)
            return f(batch.values[:, idx, 0])

        return cls(evaluator=evaluator, kind="cylinder", delta=delta, cylinder=data, label=label, params=params or {})


@dataclass(frozen=True, eq=False)
class ParamFunctionalSpec:
    """G(w, λ) with λ in a box."""
    evaluator: Callable[[PathBatch, np.ndarray], np.ndarray]
    lambda_low: np.ndarray
    lambda_high: np.ndarray
    delta: Optional[float] = 1.0
    label: str = "G"
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        low = np.atleast_1d(np.asarray(self.lambda_low, dtype=float))
        high = np.atleast_1d(np.asarray(self.lambda_high, dtype=float))
        if low.shape != high.shape or np.any(low > high):
            raise ConfigurationError("lambda domain must be a nonempty box")
        object.__setattr__(self, "lambda_low", low)
        object.__setattr__(self, "lambda_high", high)

    @property
    def lambda_dimension(self) -> int:
        return self.lambda_low.size

    def contains(self, lam: np.ndarray) -> bool:
        lam = np.atleast_1d(lam)
        return bool(np.all(lam >= self.lambda_low) and np.all(lam <= self.lambda_high))

    def evaluate_batch(self, batch: PathBatch, lam) -> np.ndarray:
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        out = np.asarray(self.evaluator(batch, lam), dtype=float).reshape(batch.n_paths)
        if np.any(np.isnan(out) | (out == np.inf)):
            raise EvaluationError("parameterized functional returned an invalid value", functional=self.label)
        return out

    # ---- builders -------------------------------------------------------

    @classmethod
    def gaussian_shift(cls, low: float = -10.0, high: float = 10.0) -> "ParamFunctionalSpec":
        """G(w, λ) = −(w(1) − λ)²/2."""
        return cls(
            evaluator=lambda b, lam: -0.5 * (b.values[:, -1, 0] - lam[0]) ** 2,
            lambda_low=[low],
            lambda_high=[high],
            label="-(w(1)-lambda)^2/2",
        )

    @classmethod
    def linear_tilt(cls, low: float = -10.0, high: float = 10.0) -> "ParamFunctionalSpec":
        """G(w, λ) = λ·w(1)."""
        return cls(
            evaluator=lambda b, lam: lam[0] * b.values[:, -1, 0],
            lambda_low=[low],
            lambda_high=[high],
            label="lambda*w(1)",
        )

    @classmethod
    def squared_terminal(cls, low: float = -10.0, high: float = 10.0) -> "ParamFunctionalSpec":
        """G(w, λ) = w(1)², independent of λ."""
        return cls(
            evaluator=lambda b, lam: b.values[:, -1, 0] ** 2,
            lambda_low=[low],
            lambda_high=[high],
            label="w(1)^2",
        )


@dataclass(frozen=True, eq=False)
class LinearFunctional:
    """l ∈ W* represented by its Cameron–Martin path; ⟨l, w⟩ is a left-point Stieltjes sum."""
    representer: CameronMartinPath
    h_norm: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "h_norm", float(np.sqrt(self.representer.norm_sq())))

    def pairing(self, values: np.ndarray) -> np.ndarray:
        return self.representer.pairing(values)

    def normalized(self) -> "LinearFunctional":
        if self.h_norm == 0.0:
            raise DomainError("the zero functional cannot be normalized")
        return LinearFunctional(self.representer.scaled(1.0 / self.h_norm))

    def scaled(self, c: float) -> "LinearFunctional":
        return LinearFunctional(self.representer.scaled(c))


@dataclass(frozen=True)
class PsiFunction:
    """Convex ψ on R with polynomial growth of the given degree."""
    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    degree: float

    def __call__(self, z):
        return self.fn(np.asarray(z, dtype=float))


PSI_BUILTINS: Dict[str, PsiFunction] = {
    "z2": PsiFunction("z2", lambda z: z ** 2, 2.0),
    "abs": PsiFunction("abs", np.abs, 1.0),
    "abs3": PsiFunction("abs3", lambda z: np.abs(z) ** 3, 3.0),
    "z4": PsiFunction("z4", lambda z: z ** 4, 4.0),
}


def make_psi(name: str) -> PsiFunction:
    """Builtin ψ by name; 'powerP' gives |z|^P for P ≥ 1."""
    if name in PSI_BUILTINS:
        return PSI_BUILTINS[name]
    if name.startswith("power"):
        try:
            p = float(name[len("power"):])
        except ValueError:
            raise ConfigurationError("malformed power test function", name=name)
        if p < 1:
            raise ConfigurationError("|z|^p is convex only for p >= 1", name=name)
        return PsiFunction(name, lambda z: np.abs(z) ** p, p)
    raise ConfigurationError("unknown test function", name=name, known=sorted(PSI_BUILTINS))
