"""
Optimizer Schemas - MCS policies and sweep curves
"""
from enum import Enum
from typing import List

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Policy(str, Enum):
    MIN_SERVICE_TIME = "min_service_time"
    MAX_THROUGHPUT = "max_throughput"


class AnalyticScheme(str, Enum):
    """Schemes with a closed-form expected service time"""
    ARQ = "arq"
    HARQ = "harq"
    NC = "nc"


class McsChoice(BaseModel):
    model_config = ConfigDict(frozen=True)

    mcs: int
    value: float = Field(..., description="Expected slots or throughput (bits/s)")


class PolicyCurve(BaseModel):
    """Chosen MCS and metric per SNR point for one (policy, scheme)"""
    model_config = ConfigDict(frozen=True)

    policy: Policy
    scheme: AnalyticScheme
    snr_grid: List[float]
    chosen_mcs: List[int]
    metric_values: List[float]

    @model_validator(mode="after")
    def check_lengths(self) -> "PolicyCurve":
        if not (len(self.snr_grid) == len(self.chosen_mcs) == len(self.metric_values)):
            raise ValueError("snr_grid, chosen_mcs and metric_values must have equal length")
        if any(b <= a for a, b in zip(self.snr_grid, self.snr_grid[1:])):
            raise ValueError("snr_grid must be strictly increasing")
        return self
