from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

from wienervar.schemas.drift import DriftFamily
from wienervar.schemas.optimizer import OptimizerConfig, QuadConfig


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ---- descriptors -----------------------------------------------------------

class GrowthSpec(StrictModel):
    c1: float = Field(0.0, ge=0, lt=0.5)
    alpha: float = Field(0.0, ge=0, lt=2)
    c2: float = Field(0.0, ge=0)


class FunctionalDescriptor(StrictModel):
    """Path functional F by kind and parameters."""
    kind: Literal[
        "linear-terminal",
        "quadratic-terminal",
        "constant",
        "polynomial-terminal",
        "exp-sup-norm",
        "potential-terminal",
        "cylinder",
    ]
    c: float = Field(1.0, description="linear-terminal coefficient")
    a: float = Field(0.25, description="quadratic-terminal coefficient")
    b: float = Field(0.0, description="constant value")
    coefficients: Optional[List[float]] = Field(None, description="polynomial-terminal, ascending powers")
    coef: float = Field(1.0, gt=0, description="exp-sup-norm coefficient")
    potential: Optional["PotentialDescriptor"] = None
    knots: Optional[List[float]] = Field(None, description="cylinder knots")
    linear: Optional[List[float]] = Field(None, description="cylinder linear coefficients")
    quadratic: Optional[List[float]] = Field(None, description="cylinder quadratic coefficients")
    delta: Optional[float] = Field(1.0, gt=0, description="Integrability exponent δ")
    growth: Optional[GrowthSpec] = None

    @model_validator(mode="after")
    def validate_kind_fields(self):
        if self.kind == "polynomial-terminal" and not self.coefficients:
            raise ValueError("polynomial-terminal needs coefficients")
        if self.kind == "potential-terminal" and self.potential is None:
            raise ValueError("potential-terminal needs a potential")
        if self.kind == "cylinder":
            if not self.knots or self.linear is None or self.quadratic is None:
                raise ValueError("cylinder needs knots, linear and quadratic coefficients")
            if not (len(self.knots) == len(self.linear) == len(self.quadratic)):
                raise ValueError("cylinder coefficient lists must match the knots")
        return self


class PotentialDescriptor(StrictModel):
    """Polynomial coefficients (ascending) or the builtin double well ½α²x⁴ − ½βx²."""
    kind: Literal["polynomial", "double_well"]
    coefficients: Optional[List[float]] = None
    alpha: Optional[float] = Field(None, gt=0)
    beta: Optional[float] = Field(None, gt=0)
    sigma: float = Field(1.0, gt=0)
    floor: Union[Literal["auto", "none"], Tuple[float, float]] = "auto"
    half_width: Optional[float] = Field(None, gt=0, description="Domain half-width R; default 12σ")

    @model_validator(mode="after")
    def validate_kind_fields(self):
        if self.kind == "polynomial" and not self.coefficients:
            raise ValueError("polynomial potentials need coefficients")
        if self.kind == "double_well" and (self.alpha is None or self.beta is None):
            raise ValueError("double_well needs alpha and beta")
        return self


class ParamFunctionalDescriptor(StrictModel):
    kind: Literal["gaussian-shift", "linear-tilt", "squared-terminal", "conditional-slice"]
    lambda_low: float = -10.0
    lambda_high: float = 10.0
    functional: Optional[FunctionalDescriptor] = Field(None, description="conditional-slice: the F being sliced")
    l: Optional["LinearFunctionalDescriptor"] = Field(None, description="conditional-slice: direction")

    @model_validator(mode="after")
    def validate_slice(self):
        if self.kind == "conditional-slice" and (self.functional is None or self.l is None):
            raise ValueError("conditional-slice needs functional and l")
        if self.lambda_low > self.lambda_high:
            raise ValueError("lambda_low must not exceed lambda_high")
        return self


class LinearFunctionalDescriptor(StrictModel):
    """l ∈ W* through its Cameron–Martin representer: c·t, c·(t∧t_max) or piecewise slopes."""
    kind: Literal["identity", "truncated", "piecewise"] = "identity"
    scale: float = 1.0
    t_max: float = Field(1.0, gt=0, le=1)
    knots: Optional[List[float]] = None
    slopes: Optional[List[float]] = None
    dimension: int = Field(1, ge=1)
    coordinate: int = Field(0, ge=0)

    @model_validator(mode="after")
    def validate_piecewise(self):
        if self.kind == "piecewise":
            if not self.knots or not self.slopes or len(self.knots) != len(self.slopes) + 1:
                raise ValueError("piecewise l needs knots and one slope per interval")
        if self.coordinate >= self.dimension:
            raise ValueError("coordinate must be below dimension")
        return self


class GridSpec(StrictModel):
    n_steps: Optional[int] = Field(None, ge=1, description="Uniform steps on [0, 1]; default from settings")


class Expectation(StrictModel):
    """Expected headline value and tolerance: |x − value| ≤ n_sigma·stderr + allowance."""
    value: Optional[float] = None
    n_sigma: float = Field(3.0, ge=0)
    allowance: float = Field(0.0, ge=0)
    strict: bool = Field(False, description="Abort with an inequality violation when an asserted inequality fails")


# ---- experiments ------------------------------------------------------------

class ExperimentBase(StrictModel):
    experiment_id: str = Field(..., pattern=r"^[A-Za-z0-9][A-Za-z0-9_.-]*$", max_length=120)
    description: Optional[str] = None
    seed: int = Field(0, ge=0)
    n_paths: Optional[int] = Field(None, ge=2, description="Monte Carlo paths; default from settings")
    grid: GridSpec = Field(default_factory=GridSpec)
    expect: Optional[Expectation] = None


class EstimateLhsConfig(ExperimentBase):
    kind: Literal["estimate-lhs"]
    functional: FunctionalDescriptor
    method: Literal["direct", "importance", "both"] = "direct"
    drift: Optional[DriftFamily] = Field(None, description="Importance drift; family with theta")
    dimension: int = Field(1, ge=1)

    @model_validator(mode="after")
    def validate_drift(self):
        if self.method != "direct" and self.drift is None:
            raise ValueError("importance sampling needs a drift")
        return self


class OptimizeDriftConfig(ExperimentBase):
    kind: Literal["optimize-drift"]
    functional: FunctionalDescriptor
    family: DriftFamily
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    expect_theta: Optional[List[float]] = None
    theta_tolerance: float = Field(0.05, gt=0)


class LowerBoundSuiteConfig(ExperimentBase):
    kind: Literal["lower-bound-suite"]
    functionals: List[FunctionalDescriptor] = Field(..., min_length=1)
    families: List[DriftFamily] = Field(..., min_length=1)
    drifts_per_family: int = Field(10, ge=1)


class TruncationSweepConfig(ExperimentBase):
    kind: Literal["truncation-sweep"]
    functional: FunctionalDescriptor
    caps: List[Optional[float]] = Field(default_factory=lambda: [None])
    floors: List[Optional[float]] = Field(default_factory=lambda: [None])
    dimension: int = Field(1, ge=1)


class ClarkOconeConfig(ExperimentBase):
    kind: Literal["clark-ocone"]
    functional: FunctionalDescriptor
    quad: QuadConfig = Field(default_factory=QuadConfig)
    pointwise_tolerance: float = Field(1e-6, gt=0)

    @field_validator("functional")
    @classmethod
    def validate_cylinder(cls, v):
        if v.kind != "cylinder":
            raise ValueError("clark-ocone needs a cylinder functional")
        return v


class EntropyCheckConfig(ExperimentBase):
    kind: Literal["entropy-check"]
    drift: DriftFamily


class PrekopaScanConfig(ExperimentBase):
    kind: Literal["prekopa-scan"]
    param_functional: ParamFunctionalDescriptor
    lambdas: List[float] = Field(..., min_length=2)
    b2_triples: int = Field(300, ge=0, description="(B2) triples; 0 skips the hypothesis check")
    expect_verdict: Literal["pass", "fail"] = "pass"
    expect_b2: Optional[bool] = None
    check_closed_form: bool = Field(False, description="Compare gaussian-shift values with −λ²/4 − ½log 2")


class BLWienerConfig(ExperimentBase):
    kind: Literal["bl-wiener"]
    functional: FunctionalDescriptor
    l: LinearFunctionalDescriptor = Field(default_factory=LinearFunctionalDescriptor)
    psi: List[str] = Field(default_factory=lambda: ["z2"], min_length=1)


class BLCertifyConfig(ExperimentBase):
    kind: Literal["bl-certify"]
    potential: PotentialDescriptor
    bass: bool = Field(True, description="Also build g, check g' ≤ σ and G(ξ) ≥ 0")
    expect_certified: Optional[bool] = None


class BLMomentsConfig(ExperimentBase):
    kind: Literal["bl-moments"]
    potential: PotentialDescriptor
    psi: List[str] = Field(default_factory=lambda: ["z2"], min_length=1)
    expect_lhs: Dict[str, float] = Field(default_factory=dict, description="Expected E[ψ(X − EX)] per ψ")
    lhs_tolerance: float = Field(1e-8, gt=0)


class DoubleWellTableConfig(ExperimentBase):
    kind: Literal["double-well-table"]
    alphas: List[float] = Field(default_factory=lambda: [1.0, 2.0, 3.0, 5.0, 10.0], min_length=1)
    betas: List[float] = Field(default_factory=lambda: [0.5, 1.0, 1.2, 2.0, 3.0], min_length=1)
    tolerance: float = Field(1e-6, gt=0)

    @field_validator("alphas", "betas")
    @classmethod
    def validate_positive(cls, v):
        if any(x <= 0 for x in v):
            raise ValueError("alpha and beta values must be positive")
        return v


class GirsanovCheckConfig(ExperimentBase):
    kind: Literal["girsanov-check"]
    functional: FunctionalDescriptor
    drifts: List[DriftFamily] = Field(..., min_length=1, description="Families with theta, one drift each")
    moments: List[float] = Field(default_factory=lambda: [2.0, 3.0])


class ConjugateRoundTripConfig(ExperimentBase):
    kind: Literal["conjugate-roundtrip"]
    families: List[DriftFamily] = Field(..., min_length=1)
    n_fixtures: int = Field(100, ge=1)
    tolerance: float = Field(1e-12, gt=0)


ExperimentConfig = Annotated[
    Union[
        EstimateLhsConfig,
        OptimizeDriftConfig,
        LowerBoundSuiteConfig,
        TruncationSweepConfig,
        ClarkOconeConfig,
        EntropyCheckConfig,
        PrekopaScanConfig,
        BLWienerConfig,
        BLCertifyConfig,
        BLMomentsConfig,
        DoubleWellTableConfig,
        GirsanovCheckConfig,
        ConjugateRoundTripConfig,
    ],
    Field(discriminator="kind"),
]

EXPERIMENT_KINDS = (
    "estimate-lhs",
    "optimize-drift",
    "lower-bound-suite",
    "truncation-sweep",
    "clark-ocone",
    "entropy-check",
    "prekopa-scan",
    "bl-wiener",
    "bl-certify",
    "bl-moments",
    "double-well-table",
    "girsanov-check",
    "conjugate-roundtrip",
)

FunctionalDescriptor.model_rebuild()
ParamFunctionalDescriptor.model_rebuild()
