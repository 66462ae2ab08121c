"""Manifest Schemas - one TOML section per model, all optional with defaults."""
from enum import Enum
from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.config import settings
from app.schemas.analytic import NcCode, TimingParams
from app.schemas.optimizer import AnalyticScheme, Policy
from app.schemas.simulation import MAX_SEED, Release, Scheme, SimConfig


class ReportFormat(str, Enum):
    CSV = "csv"
    SVG = "svg"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _check_range(lo: float, hi: float, step: float) -> None:
    if step <= 0:
        raise ValueError(f"snr_step must be > 0, got {step}")
    if hi < lo:
        raise ValueError(f"snr_hi ({hi}) must be >= snr_lo ({lo})")


# =============================================================================
# SECTIONS
# =============================================================================

class RunSection(_Section):
    out_dir: Optional[str] = None
    formats: List[ReportFormat] = Field(default_factory=lambda: [ReportFormat.CSV])
    mcs_csv: Optional[str] = Field(None, description="MCS table; shipped 256QAM table when unset")
    bler_csv: Optional[str] = Field(None, description="BLER grid; synthetic family when unset")
    seed: int = Field(default=0, ge=0, le=MAX_SEED)

    @field_validator("formats")
    @classmethod
    def dedupe_formats(cls, v: List[ReportFormat]) -> List[ReportFormat]:
        if not v:
            raise ValueError("at least one report format is required")
        return sorted(set(v), key=lambda f: f.value)


class SimulationSection(_Section):
    scheme: Scheme = Scheme.HARQ
    rtt_slots: int = Field(default=16, ge=1)
    tau_slots: int = Field(default=1, ge=1)
    num_harq_processes: int = Field(default=16, ge=1)
    unlocked: bool = False
    k: Optional[int] = Field(None, ge=1)
    n: Optional[int] = Field(None, ge=1)
    num_streams: int = Field(default=1, ge=1)
    release: Release = Release.SYSTEMATIC
    mcs: int = Field(default=0, ge=0)
    snr_db: float = 0.0
    num_packets: int = Field(default=100_000, ge=1)
    max_retx: int = Field(default=settings.DEFAULT_MAX_RETX, ge=0)

    @model_validator(mode="after")
    def check_code(self) -> "SimulationSection":
        if (self.k is None) != (self.n is None):
            raise ValueError("k and n must be given together")
        return self

    def to_config(self, seed: int) -> SimConfig:
        code = NcCode(k=self.k, n=self.n) if self.k is not None else None
        return SimConfig(
            **self.model_dump(exclude={"k", "n"}), code=code, seed=seed
        )


class AnalyticSection(_Section):
    rtt: float = Field(default=16.0, gt=0)
    tau: float = Field(default=1.0, gt=0)
    mcs: int = Field(default=0, ge=0)
    snr_lo: float = settings.SNR_GRID_LO_DB
    snr_hi: float = settings.SNR_GRID_HI_DB
    snr_step: float = 1.0
    schemes: List[AnalyticScheme] = Field(
        default_factory=lambda: [AnalyticScheme.ARQ, AnalyticScheme.HARQ, AnalyticScheme.NC]
    )
    nc_k: int = Field(default=2, ge=1)

    @model_validator(mode="after")
    def check_grid(self) -> "AnalyticSection":
        _check_range(self.snr_lo, self.snr_hi, self.snr_step)
        return self

    @property
    def timing(self) -> TimingParams:
        return TimingParams(rtt=self.rtt, tau=self.tau)


class SweepSection(_Section):
    rtt: float = Field(default=16.0, gt=0)
    tau: float = Field(default=1.0, gt=0)
    snr_lo: float = settings.SNR_GRID_LO_DB
    snr_hi: float = settings.SNR_GRID_HI_DB
    snr_step: float = settings.SNR_GRID_STEP_DB
    schemes: List[AnalyticScheme] = Field(default_factory=lambda: [AnalyticScheme.HARQ])
    policies: List[Policy] = Field(
        default_factory=lambda: [Policy.MIN_SERVICE_TIME, Policy.MAX_THROUGHPUT]
    )
    bler_cap: Optional[float] = Field(None, ge=0, le=1)
    nc_k: int = Field(default=2, ge=1)

    @model_validator(mode="after")
    def check_grid(self) -> "SweepSection":
        _check_range(self.snr_lo, self.snr_hi, self.snr_step)
        return self

    @property
    def timing(self) -> TimingParams:
        return TimingParams(rtt=self.rtt, tau=self.tau)


class SlaSection(_Section):
    p_grid: List[float] = Field(default_factory=lambda: [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3])
    k: int = Field(default=4, ge=1)
    max_failure: float = Field(default=1e-3, gt=0, lt=1)
    mcs: int = Field(default=0, ge=0)
    rtt_slots: int = Field(default=16, ge=1)
    tau_slots: int = Field(default=1, ge=1)
    num_harq_processes: int = Field(default=16, ge=1)
    num_packets: int = Field(default=20_000, ge=100)

    @field_validator("p_grid")
    @classmethod
    def check_grid(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("p_grid is empty")
        if any(not 0.0 <= p < 1.0 for p in v):
            raise ValueError("every erasure probability must be in [0, 1)")
        return sorted(set(v))


class FiguresSection(_Section):
    snr_lo: float = settings.SNR_GRID_LO_DB
    snr_hi: float = settings.SNR_GRID_HI_DB
    snr_step: float = 1.0
    packets_per_point: int = Field(default=10_000, ge=100)
    rtt_slots: int = Field(default=16, ge=1)
    large_flight: int = Field(default=160, ge=1, description="TBs per RTT in the large-flight run")
    nc_k: int = Field(default=2, ge=1)
    hijack_k: int = Field(default=3, ge=1)
    hijack_n: int = Field(default=4, ge=1)

    @model_validator(mode="after")
    def check_fields(self) -> "FiguresSection":
        _check_range(self.snr_lo, self.snr_hi, self.snr_step)
        NcCode(k=self.hijack_k, n=self.hijack_n)
        return self


# =============================================================================
# MANIFEST
# =============================================================================

class RunManifest(_Section):
    """Validated manifest with paths resolved against the manifest file"""
    run: RunSection = Field(default_factory=RunSection)
    simulation: SimulationSection = Field(default_factory=SimulationSection)
    analytic: AnalyticSection = Field(default_factory=AnalyticSection)
    sweep: SweepSection = Field(default_factory=SweepSection)
    sla: SlaSection = Field(default_factory=SlaSection)
    figures: FiguresSection = Field(default_factory=FiguresSection)

    source: Optional[Path] = None
    out_dir: Path = Path(settings.FALLBACK_OUTPUT_DIR)

    @property
    def seed(self) -> int:
        return self.run.seed

    def wants(self, fmt: ReportFormat) -> bool:
        return fmt in self.run.formats

    def sim_config(self) -> SimConfig:
        return self.simulation.to_config(self.run.seed)
