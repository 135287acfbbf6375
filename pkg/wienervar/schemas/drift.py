from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import List, Literal, Optional, Union


class DriftFamily(BaseModel):
    """Parameterized drift family; every θ in the box instantiates a SimpleDrift."""
    model_config = ConfigDict(extra="forbid")

    kind: Literal["constant", "piecewise-constant", "linear-state-feedback"] = Field(
        ..., description="Family kind"
    )
    knots: List[float] = Field([0.0, 1.0], description="Drift knots t_0=0 < ... < t_m=1, all grid knots")
    dimension: int = Field(1, ge=1, le=4, description="Path dimension d")
    lower: Union[float, List[float]] = Field(-5.0, description="Lower box bound, scalar or per parameter")
    upper: Union[float, List[float]] = Field(5.0, description="Upper box bound, scalar or per parameter")
    clamp_bound: Optional[float] = Field(
        None, gt=0, description="Clamp feedback outputs to this norm (restores boundedness)"
    )
    theta: Optional[List[float]] = Field(None, description="A specific parameter vector, e.g. a fitted optimum")

    @field_validator("knots")
    @classmethod
    def validate_knots(cls, v):
        if len(v) < 2 or v[0] != 0.0 or v[-1] != 1.0:
            raise ValueError("knots must start at 0 and end at 1")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("knots must be strictly increasing")
        return v

    @model_validator(mode="after")
    def validate_box(self):
        n = self.n_params
        for name in ("lower", "upper"):
            bound = getattr(self, name)
            if isinstance(bound, list) and len(bound) != n:
                raise ValueError(f"{name} must be a scalar or have {n} entries")
        if self.theta is not None and len(self.theta) != n:
            raise ValueError(f"theta must have {n} entries")
        return self

    @property
    def n_intervals(self) -> int:
        return len(self.knots) - 1

    @property
    def n_params(self) -> int:
        if self.kind == "constant":
            return self.dimension
        if self.kind == "piecewise-constant":
            return self.n_intervals * self.dimension
        return self.n_intervals * (self.dimension + 1)
