from pydantic import BaseModel, Field


class Estimate(BaseModel):
    """Monte Carlo scalar with its standard error."""
    value: float = Field(..., description="Point estimate")
    stderr: float = Field(..., ge=0, description="Standard error")
    n_samples: int = Field(..., gt=0, description="Number of samples")
    seed: int = Field(..., description="Seed the samples were drawn from")

    def interval(self, n_sigma: float = 3.0) -> tuple:
        return self.value - n_sigma * self.stderr, self.value + n_sigma * self.stderr

    def agrees_with(self, target: float, n_sigma: float = 3.0, allowance: float = 0.0) -> bool:
        return abs(self.value - target) <= n_sigma * self.stderr + allowance


class ANormSq(BaseModel):
    """Monte Carlo estimate of E[∫|v_s|² ds]."""
    value: float = Field(..., ge=0, description="Estimated squared A-norm")
    stderr: float = Field(..., ge=0, description="Standard error")
    n_samples: int = Field(..., gt=0)
    seed: int
