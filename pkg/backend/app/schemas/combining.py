"""
Combining Schemas
"""
from pydantic import BaseModel, ConfigDict, Field


class SignalMoments(BaseModel):
    """Second moments of signal and noise; linear SNR is ex2 / en2"""
    model_config = ConfigDict(frozen=True)

    ex2: float = Field(..., gt=0, allow_inf_nan=False, description="Signal power E[X^2]")
    en2: float = Field(..., gt=0, allow_inf_nan=False, description="Noise power E[N^2]")
