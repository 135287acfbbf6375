from pydantic import BaseModel, ConfigDict, Field, field_validator
from typing import List


class OptimizerConfig(BaseModel):
    """SPSA schedule a_k = a/(k+1+A)^alpha, c_k = c/(k+1)^gamma."""
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    iterations: int = Field(500, ge=1, description="Iteration budget")
    a: float = Field(0.1, gt=0, description="Step-size scale")
    big_a: float = Field(10.0, ge=0, alias="A", description="Step-size stability offset")
    c: float = Field(0.1, gt=0, description="Perturbation scale")
    alpha: float = Field(0.602, gt=0)
    gamma: float = Field(0.101, gt=0)
    n_paths_per_eval: int = Field(4096, ge=2, description="Paths per common-random-number batch")
    final_n_paths: int = Field(100_000, ge=2, description="Paths for the fresh re-evaluation of the best θ")
    max_nonfinite_streak: int = Field(5, ge=1, description="Consecutive non-finite objectives before giving up")

    def step(self, k: int) -> float:
        return self.a / (k + 1 + self.big_a) ** self.alpha

    def perturbation(self, k: int) -> float:
        return self.c / (k + 1) ** self.gamma


class QuadConfig(BaseModel):
    """Gauss–Hermite order escalation for conditional expectations."""
    model_config = ConfigDict(extra="forbid")

    orders: List[int] = Field([16, 32, 64], description="Increasing quadrature orders")
    rtol: float = Field(1e-8, gt=0, description="Relative change accepted between consecutive orders")

    @field_validator("orders")
    @classmethod
    def validate_orders(cls, v):
        if len(v) < 2 or any(b <= a for a, b in zip(v, v[1:])) or v[0] < 2:
            raise ValueError("orders must be at least two increasing integers >= 2")
        return v
