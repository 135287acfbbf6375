from pydantic import BaseModel, Field, model_validator
from typing import Any, Dict, List, Literal, Optional, Tuple

from wienervar.schemas.estimate import Estimate


Verdict = Literal["pass", "fail", "inconclusive"]


# ---- variational -------------------------------------------------------

class OptimizationIterate(BaseModel):
    iteration: int = Field(..., ge=0)
    theta: List[float]
    objective: Estimate


class OptimizationTrace(BaseModel):
    """Full SPSA history; best_objective is the maximum over the trace."""
    iterates: List[OptimizationIterate]
    best_theta: List[float]
    best_objective: Estimate
    final_objective: Optional[Estimate] = Field(None, description="Best θ re-evaluated on a fresh larger sample")
    step_rule: Dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def best_is_max(self):
        if self.iterates:
            top = max(it.objective.value for it in self.iterates)
            if self.best_objective.value != top:
                raise ValueError("best_objective must be the maximum over the trace")
        return self


class TruncationRow(BaseModel):
    cap_m: Optional[float] = Field(None, description="Upper truncation level M; None = no cap")
    floor_n: Optional[float] = Field(None, description="Lower truncation level N; None = no floor")
    estimate: Estimate


class TruncationReport(BaseModel):
    rows: List[TruncationRow]
    monotone_in_m: bool
    monotone_in_n: bool


class AssumptionReport(BaseModel):
    delta: Optional[float] = None
    log_mean_exp: Estimate
    max_summand_share: float
    negative_part_moment: Optional[Estimate] = Field(None, description="E[F₋^{1+δ}]")
    rejected_paths: int = 0
    growth_checked: bool = False
    growth_holds: Optional[bool] = None
    growth_violations: int = 0


class LowerBoundRow(BaseModel):
    drift: str
    objective: Estimate
    margin: float
    combined_stderr: float
    violated: bool


class LowerBoundReport(BaseModel):
    lhs: Estimate
    rows: List[LowerBoundRow]
    worst_margin: float
    worst_margin_sigmas: float
    n_violations: int


class EntropyReport(BaseModel):
    lhs: Estimate = Field(..., description="E^v[log E^v_1]")
    rhs: Estimate = Field(..., description="½E^v[∫|v|² ds]")
    difference: float
    combined_stderr: float
    agrees: bool


class ClarkOconeReport(BaseModel):
    max_pointwise_error: Optional[float] = Field(None, description="Against the closed-form feedback, when known")
    lhs: Estimate
    objective: Estimate
    combined_stderr: float
    agrees: bool


class GirsanovReport(BaseModel):
    mean_weight: Estimate
    plain_mean: Estimate
    reweighted_mean: Estimate
    moments: List[Dict[str, Any]] = Field(default_factory=list)
    holds: bool


class RoundTripReport(BaseModel):
    n_fixtures: int
    max_tilde_error: float
    max_bar_error: float
    tolerance: float
    holds: bool


# ---- prekopa ------------------------------------------------------------

class MidpointDeficit(BaseModel):
    lambda_i: List[float]
    lambda_j: List[float]
    deficit: float
    stderr: float


class ConcavityReport(BaseModel):
    lambda_grid: List[List[float]]
    values: List[Optional[Estimate]]
    deficits: List[MidpointDeficit]
    failures: List[str] = Field(default_factory=list)
    verdict: Verdict


class B2Report(BaseModel):
    n_triples: int
    n_violations: int
    worst_slack: float
    holds: bool
    example_violation: Optional[Dict[str, float]] = None


class WienerBLRow(BaseModel):
    psi: str
    lhs: float
    lhs_stderr: float
    rhs: float
    holds: bool


class WienerBLReport(BaseModel):
    h_norm: float
    tilted_mean: float
    effective_sample_size: float
    ess_fraction: float
    rows: List[WienerBLRow]
    holds: bool


# ---- appendix ----------------------------------------------------------

class BLConditionReport(BaseModel):
    log_z: float
    tail_remainder: Optional[float] = Field(None, description="Certified tail bound outside [-R, R]; None without a floor")
    region: List[Tuple[float, float]]
    inf_u_on_d: float
    inf_h_on_d: float
    argmin_u: Optional[float] = None
    argmin_h: Optional[float] = None
    cond_inf1_holds: bool
    cond_inf2_holds: bool
    cond_inf1_marginal: bool = False
    cond_inf2_marginal: bool = False

    @property
    def certified(self) -> bool:
        return self.cond_inf1_holds or self.cond_inf2_holds


class GPrimeReport(BaseModel):
    sigma: float
    max_gprime: float
    argmax_x: float
    holds: bool
    clamped_points: int = 0


class CapitalGReport(BaseModel):
    min_value: float
    argmin_xi: float
    boundary_low: float
    boundary_high: float
    boundary_decays: bool
    holds: bool


class MomentRow(BaseModel):
    psi: str
    lhs: float
    rhs: float
    holds: bool


class MomentReport(BaseModel):
    certified: bool
    mean_x: float
    rows: List[MomentRow]
    holds: bool
    asserted: bool


class DoubleWellRow(BaseModel):
    alpha: float
    beta: float
    inf_h_closed: float
    inf_h_numeric: float
    inf_u_closed: float
    inf_u_numeric: float
    max_error: float
