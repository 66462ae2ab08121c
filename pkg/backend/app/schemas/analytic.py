"""
Analytic Schemas - timing, network codes and service-time estimates
"""
from pydantic import BaseModel, ConfigDict, Field, model_validator


class TimingParams(BaseModel):
    """Round trip time and per-packet air time, both in slots"""
    model_config = ConfigDict(frozen=True)

    rtt: float = Field(..., gt=0, description="Round trip time (slots)")
    tau: float = Field(default=1.0, gt=0, description="Per-packet transmission time (slots)")

    def tau_is_negligible(self, ratio: float) -> bool:
        return self.tau < self.rtt * ratio


class NcCode(BaseModel):
    """Block network code: K originals coded into N packets"""
    model_config = ConfigDict(frozen=True)

    k: int = Field(..., ge=1, description="Original packets per block")
    n: int = Field(..., ge=1, description="Coded packets per block")

    @model_validator(mode="after")
    def check_n_ge_k(self) -> "NcCode":
        if self.n < self.k:
            raise ValueError(f"Code needs n >= k, got k={self.k}, n={self.n}")
        return self

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def redundancy(self) -> int:
        return self.n - self.k


class ServiceTimeEstimate(BaseModel):
    """Expected service time E[X] with its truncation bookkeeping"""
    model_config = ConfigDict(frozen=True)

    expected_slots: float = Field(..., gt=0)
    truncation_residual: float = Field(default=0.0, ge=0)
    terms_used: int = Field(default=1, ge=1)
