from pydantic import BaseModel, Field
from typing import Any, Dict, List, Optional

from wienervar.schemas.reports import Verdict


class CheckResult(BaseModel):
    """One pass/fail assertion of an experiment."""
    name: str = Field(..., description="Short check name, e.g. 'expect' or 'lower-bound'")
    passed: bool
    observed: Optional[float] = None
    expected: Optional[float] = None
    tolerance: Optional[float] = None
    detail: Optional[str] = None


class EstimateRow(BaseModel):
    """One row of estimates.csv."""
    quantity: str
    value: float
    stderr: float = 0.0
    n: Optional[int] = None
    seed: Optional[int] = None


class RunRecord(BaseModel):
    experiment_id: str
    kind: str
    config: Dict[str, Any]
    config_hash: str = Field(..., description="sha256 of the canonical config JSON")
    version: str
    created_at: str
    wall_time_seconds: float
    payload: Dict[str, Any] = Field(default_factory=dict)
    series: Dict[str, List[Dict[str, Any]]] = Field(default_factory=dict)
    estimates: List[EstimateRow] = Field(default_factory=list)
    checks: List[CheckResult] = Field(default_factory=list)
    verdict: Verdict
    exit_code: int


class SuiteRow(BaseModel):
    config: str
    experiment_id: Optional[str] = None
    verdict: str
    exit_code: int
    wall_time_seconds: float
    detail: Optional[str] = None


class SuiteSummary(BaseModel):
    rows: List[SuiteRow]
    passed: int
    failed: int
    exit_code: int
