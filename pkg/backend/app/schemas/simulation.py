"""
Simulation Schemas - run configuration, per-TB records and run results
"""
from enum import Enum
from typing import Iterator, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.config import settings
from app.schemas.analytic import NcCode

MAX_SEED = 2**64 - 1


class Scheme(str, Enum):
    SR_ARQ = "sr_arq"
    HARQ = "harq"
    NC_BLOCK = "nc_block"
    NC_HIJACK = "nc_hijack"
    NC_MULTISTREAM = "nc_multistream"

    @property
    def is_block(self) -> bool:
        return self in (Scheme.NC_BLOCK, Scheme.NC_HIJACK, Scheme.NC_MULTISTREAM)


class Release(str, Enum):
    """When the originals of a coded block count as served"""
    # intact originals on their own feedback, erased ones once decodable
    SYSTEMATIC = "systematic"
    # any erasure holds the whole block until it decodes
    BLOCK = "block"


# =============================================================================
# CONFIGURATION
# =============================================================================

class SimConfig(BaseModel):
    """Full description of one simulation run"""
    model_config = ConfigDict(frozen=True)

    scheme: Scheme
    rtt_slots: int = Field(..., ge=1)
    tau_slots: int = Field(default=1, ge=1)
    num_harq_processes: int = Field(default=16, ge=1)
    # Lifts the 3GPP cap for the 160-TB/RTT study
    unlocked: bool = False
    code: Optional[NcCode] = None
    num_streams: int = Field(default=1, ge=1)
    release: Release = Release.SYSTEMATIC
    mcs: int = Field(default=0, ge=0)
    snr_db: float = Field(default=0.0, allow_inf_nan=False)
    num_packets: int = Field(..., ge=1)
    seed: int = Field(default=0, ge=0, le=MAX_SEED)
    max_retx: int = Field(default=settings.DEFAULT_MAX_RETX, ge=0)

    @model_validator(mode="after")
    def check_scheme_fields(self) -> "SimConfig":
        if not self.unlocked and self.num_harq_processes > settings.HARQ_PROCESS_CAP:
            raise ValueError(
                f"num_harq_processes={self.num_harq_processes} exceeds the "
                f"{settings.HARQ_PROCESS_CAP}-process cap; set unlocked=true to lift it"
            )
        if self.scheme.is_block and self.code is None:
            raise ValueError(f"Scheme {self.scheme.value} requires a network code (k, n)")
        return self


# =============================================================================
# RECORDS & RESULTS
# =============================================================================

class ServiceRecord(BaseModel):
    """Service of one transport block / original packet"""
    model_config = ConfigDict(frozen=True)

    packet_id: int = Field(..., ge=0)
    first_tx_slot: int = Field(..., ge=0)
    completion_slot: int
    attempts: int = Field(..., ge=1)

    @model_validator(mode="after")
    def check_order(self) -> "ServiceRecord":
        if self.completion_slot <= self.first_tx_slot:
            raise ValueError("completion_slot must be after first_tx_slot")
        return self

    @property
    def service_slots(self) -> int:
        return self.completion_slot - self.first_tx_slot


class SummaryStats(BaseModel):
    """Mean / tail / throughput summary of a run"""
    model_config = ConfigDict(frozen=True)

    mean_service_slots: float
    p99_service_slots: float
    std_error_slots: float = Field(..., ge=0)
    throughput_packets_per_slot: float = Field(..., ge=0)
    completed: int = Field(..., ge=0)
    failed: int = Field(..., ge=0)
    total_slots: int = Field(..., ge=0)

    @property
    def fail_rate(self) -> float:
        total = self.completed + self.failed
        return self.failed / total if total else 0.0


class SimResult(BaseModel):
    """
    Outcome of one run. Records are stored column-wise (numpy int64) so a
    million-packet run stays cheap; records() yields ServiceRecord models.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    config: SimConfig
    packet_id: np.ndarray
    first_tx_slot: np.ndarray
    completion_slot: np.ndarray
    attempts: np.ndarray
    failed_packet_ids: List[int] = Field(default_factory=list)
    stats: SummaryStats

    @property
    def service_slots(self) -> np.ndarray:
        return self.completion_slot - self.first_tx_slot

    @property
    def mean_service_slots(self) -> float:
        return self.stats.mean_service_slots

    @property
    def p99_service_slots(self) -> float:
        return self.stats.p99_service_slots

    @property
    def throughput_packets_per_slot(self) -> float:
        return self.stats.throughput_packets_per_slot

    @property
    def total_slots(self) -> int:
        return self.stats.total_slots

    def __len__(self) -> int:
        return int(self.packet_id.size)

    def records(self) -> Iterator[ServiceRecord]:
        for pid, first, done, attempts in zip(
            self.packet_id.tolist(),
            self.first_tx_slot.tolist(),
            self.completion_slot.tolist(),
            self.attempts.tolist(),
        ):
            yield ServiceRecord(
                packet_id=pid, first_tx_slot=first, completion_slot=done, attempts=attempts
            )

    def same_outcome(self, other: "SimResult") -> bool:
        """Bit-identical records and failures"""
        return (
            np.array_equal(self.packet_id, other.packet_id)
            and np.array_equal(self.first_tx_slot, other.first_tx_slot)
            and np.array_equal(self.completion_slot, other.completion_slot)
            and np.array_equal(self.attempts, other.attempts)
            and self.failed_packet_ids == other.failed_packet_ids
            and self.stats == other.stats
        )
