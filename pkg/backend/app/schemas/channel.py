"""
Channel Schemas - MCS table rows, BLER grids and SNR values
"""
import math
from enum import Enum
from typing import Dict, Iterable, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator

# BLER curves may wiggle by float noise after ingestion; anything larger is a bad table
MONOTONE_TOLERANCE = 1e-9
SE_RELATIVE_TOLERANCE = 1e-6


# =============================================================================
# MCS TABLE
# =============================================================================

class McsEntry(BaseModel):
    """One row of an MCS table"""
    model_config = ConfigDict(frozen=True)

    index: int = Field(..., ge=0, description="MCS index (0-based)")
    modulation_order: int = Field(..., ge=1, description="Bits per symbol (Qm)")
    code_rate: float = Field(..., gt=0, le=1)
    spectral_efficiency: float = Field(..., gt=0, description="Information bits per symbol")

    @model_validator(mode="after")
    def check_efficiency(self) -> "McsEntry":
        if self.spectral_efficiency > self.modulation_order:
            raise ValueError(
                f"MCS {self.index}: spectral efficiency {self.spectral_efficiency} "
                f"exceeds modulation order {self.modulation_order}"
            )
        expected = self.modulation_order * self.code_rate
        if not math.isclose(self.spectral_efficiency, expected, rel_tol=SE_RELATIVE_TOLERANCE):
            raise ValueError(
                f"MCS {self.index}: spectral efficiency {self.spectral_efficiency} "
                f"!= modulation_order x code_rate = {expected}"
            )
        return self


def validate_mcs_entries(entries: List[McsEntry]) -> List[McsEntry]:
    """Indices must be unique and ascending"""
    if not entries:
        raise ValueError("MCS table is empty")
    indices = [e.index for e in entries]
    if any(b <= a for a, b in zip(indices, indices[1:])):
        raise ValueError(f"MCS indices must be unique and ascending, got {indices}")
    return entries


# =============================================================================
# BLER TABLE
# =============================================================================

class BlerPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    snr_db: float = Field(..., allow_inf_nan=False)
    bler: float = Field(..., ge=0.0, le=1.0)


class BlerTable(BaseModel):
    """
    Grid mapping (MCS index, SNR dB) -> block error rate.

    Per MCS the SNR points are strictly increasing and the BLER is
    non-increasing in SNR. Numpy copies of each curve are kept for lookups.
    """
    model_config = ConfigDict(frozen=True)

    entries: Dict[int, Tuple[BlerPoint, ...]]

    _snr: Dict[int, np.ndarray] = PrivateAttr(default_factory=dict)
    _bler: Dict[int, np.ndarray] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def check_curves(self) -> "BlerTable":
        if not self.entries:
            raise ValueError("BLER table is empty")
        for mcs, points in self.entries.items():
            if not points:
                raise ValueError(f"MCS {mcs} has no BLER points")
            for prev, cur in zip(points, points[1:]):
                if cur.snr_db <= prev.snr_db:
                    raise ValueError(
                        f"MCS {mcs}: SNR points must be strictly increasing "
                        f"({prev.snr_db} then {cur.snr_db})"
                    )
                if cur.bler > prev.bler + MONOTONE_TOLERANCE:
                    raise ValueError(
                        f"MCS {mcs}: BLER increases with SNR at {cur.snr_db} dB "
                        f"({prev.bler} -> {cur.bler})"
                    )
        return self

    def model_post_init(self, __context) -> None:
        for mcs, points in self.entries.items():
            self._snr[mcs] = np.array([p.snr_db for p in points], dtype=float)
            self._bler[mcs] = np.array([p.bler for p in points], dtype=float)

    @classmethod
    def from_rows(cls, rows: Iterable[Tuple[int, float, float]]) -> "BlerTable":
        """Build from (mcs, snr_db, bler) rows in any order"""
        grouped: Dict[int, List[BlerPoint]] = {}
        for mcs, snr_db, bler in rows:
            grouped.setdefault(int(mcs), []).append(BlerPoint(snr_db=snr_db, bler=bler))
        entries = {
            mcs: tuple(sorted(points, key=lambda p: p.snr_db))
            for mcs, points in sorted(grouped.items())
        }
        return cls(entries=entries)

    @property
    def mcs_indices(self) -> List[int]:
        return sorted(self.entries)

    def has_mcs(self, mcs: int) -> bool:
        return mcs in self.entries

    def curve(self, mcs: int) -> Tuple[np.ndarray, np.ndarray]:
        """(snr_db, bler) arrays for one MCS; KeyError if absent"""
        return self._snr[mcs], self._bler[mcs]

    def rows(self) -> List[Tuple[int, float, float]]:
        return [
            (mcs, p.snr_db, p.bler)
            for mcs in self.mcs_indices
            for p in self.entries[mcs]
        ]


# =============================================================================
# SNR VALUES
# =============================================================================

class SnrDomain(str, Enum):
    DECIBEL = "decibel"
    LINEAR = "linear"


class SnrValue(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float = Field(..., allow_inf_nan=False)
    domain: SnrDomain = SnrDomain.DECIBEL

    @model_validator(mode="after")
    def check_linear_positive(self) -> "SnrValue":
        if self.domain == SnrDomain.LINEAR and self.value <= 0:
            raise ValueError("Linear SNR must be > 0")
        return self

    def to_linear(self) -> "SnrValue":
        if self.domain == SnrDomain.LINEAR:
            return self
        return SnrValue(value=10.0 ** (self.value / 10.0), domain=SnrDomain.LINEAR)

    def to_db(self) -> "SnrValue":
        if self.domain == SnrDomain.DECIBEL:
            return self
        return SnrValue(value=10.0 * math.log10(self.value), domain=SnrDomain.DECIBEL)
