"""
Channel Service
MCS tables, BLER grids (ingested or synthetic), SNR conversions, HARQ
per-attempt failure probabilities and Bernoulli erasure sampling.

HARQ combining is modelled as effective-SNR scaling: the n-th attempt sees
the BLER of a single reception at n times the linear SNR.
"""
import csv
import logging
import math
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError
from scipy.special import expit

from app.core.config import settings
from app.schemas.channel import BlerTable, McsEntry, validate_mcs_entries
from app.services import reports

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
DEFAULT_MCS_TABLE_PATH = DATA_DIR / "mcs_table_256qam.csv"

MCS_HEADER = ["index", "modulation_order", "code_rate", "spectral_efficiency"]
BLER_HEADER = ["mcs_index", "snr_db", "bler"]

# Grid arithmetic is rounded to this many decimals so 0.1 dB steps stay exact text
GRID_DECIMALS = 10


class ChannelError(Exception):
    """Base error for channel operations"""
    def __init__(self, message: str):
        self.message = message
        super().__init__(self.message)


class BlerLookupError(ChannelError):
    def __init__(self, mcs: int):
        self.mcs = mcs
        super().__init__(f"MCS index {mcs} is not in the BLER table")


class TableValidationError(ChannelError):
    """CSV ingestion failure; names the file and, when known, the line"""
    def __init__(self, path: Union[str, Path], detail: str, line: Optional[int] = None):
        self.path = str(path)
        self.line = line
        location = f"{path}:{line}" if line is not None else f"{path}"
        super().__init__(f"{location}: {detail}")


class ErasureDomainError(ChannelError, ValueError):
    pass


# =============================================================================
# SNR CONVERSIONS
# =============================================================================

def db_to_linear(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


def linear_to_db(snr_linear: float) -> float:
    if snr_linear <= 0:
        raise ChannelError(f"Linear SNR must be > 0, got {snr_linear}")
    return 10.0 * math.log10(snr_linear)


def effective_snr_db(snr_db: float, attempts: Union[int, np.ndarray]) -> np.ndarray:
    """SNR (dB) seen after combining `attempts` receptions at snr_db"""
    return 10.0 * np.log10(np.asarray(attempts, dtype=float) * db_to_linear(snr_db))


def snr_grid(lo: float, hi: float, step: float) -> np.ndarray:
    """Inclusive grid lo, lo+step, ... with floor((hi-lo)/step)+1 points"""
    if step <= 0:
        raise ChannelError(f"SNR step must be > 0, got {step}")
    if hi < lo:
        raise ChannelError(f"SNR range is empty: lo={lo} > hi={hi}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(count), GRID_DECIMALS)


def default_snr_grid() -> np.ndarray:
    return snr_grid(settings.SNR_GRID_LO_DB, settings.SNR_GRID_HI_DB, settings.SNR_GRID_STEP_DB)


# =============================================================================
# BLER LOOKUP
# =============================================================================

def _curve(table: BlerTable, mcs: int):
    if not table.has_mcs(mcs):
        raise BlerLookupError(mcs)
    return table.curve(mcs)


def bler_lookup(table: BlerTable, mcs: int, snr_db: float) -> float:
    """Linear interpolation in dB, clamped to the first/last grid value"""
    xs, ys = _curve(table, mcs)
    return float(np.interp(snr_db, xs, ys))


def bler_curve(table: BlerTable, mcs: int, snr_db: Union[Sequence[float], np.ndarray]) -> np.ndarray:
    xs, ys = _curve(table, mcs)
    return np.interp(np.asarray(snr_db, dtype=float), xs, ys)


def harq_attempt_failure_prob(table: BlerTable, mcs: int, snr_db: float, attempt: int) -> float:
    if attempt < 1:
        raise ChannelError(f"attempt must be >= 1, got {attempt}")
    return float(harq_failure_curve(table, mcs, snr_db, attempt)[attempt - 1])


def harq_failure_curve(table: BlerTable, mcs: int, snr_db: float, max_tx: int) -> np.ndarray:
    """Failure probability of attempts 1..max_tx"""
    if max_tx < 1:
        raise ChannelError(f"max_tx must be >= 1, got {max_tx}")
    attempts = np.arange(1, max_tx + 1)
    return bler_curve(table, mcs, effective_snr_db(snr_db, attempts))


def snr_for_bler(table: BlerTable, mcs: int, target_bler: float) -> float:
    """
    SNR at which the first-attempt BLER equals target_bler. Targets outside
    the curve's range clamp to the grid edges.
    """
    if not 0.0 <= target_bler <= 1.0:
        raise ErasureDomainError(f"target BLER must be in [0, 1], got {target_bler}")
    xs, ys = _curve(table, mcs)
    # BLER falls with SNR; interpolate on the reversed curve
    return float(np.interp(target_bler, ys[::-1], xs[::-1]))


# =============================================================================
# SYNTHETIC BLER FAMILY
# =============================================================================

def synth_threshold_db(
    entry: McsEntry,
    offset_db: float = settings.SYNTH_OFFSET_DB,
    slope_db: float = settings.SYNTH_SE_SLOPE_DB,
) -> float:
    """SNR where the synthetic BLER of this MCS crosses 0.5"""
    return offset_db + slope_db * entry.spectral_efficiency


def synth_bler(
    entry: McsEntry,
    snr_db: Union[float, np.ndarray],
    steepness: float = settings.SYNTH_STEEPNESS,
    offset_db: float = settings.SYNTH_OFFSET_DB,
    slope_db: float = settings.SYNTH_SE_SLOPE_DB,
) -> Union[float, np.ndarray]:
    """1 / (1 + exp(steepness * (snr_db - s0)))"""
    if steepness <= 0:
        raise ChannelError(f"steepness must be > 0, got {steepness}")
    s0 = synth_threshold_db(entry, offset_db, slope_db)
    value = expit(-steepness * (np.asarray(snr_db, dtype=float) - s0))
    return float(value) if np.ndim(value) == 0 else value


def synth_bler_table(
    mcs_table: Sequence[McsEntry],
    grid: Optional[np.ndarray] = None,
    steepness: float = settings.SYNTH_STEEPNESS,
    offset_db: float = settings.SYNTH_OFFSET_DB,
    slope_db: float = settings.SYNTH_SE_SLOPE_DB,
) -> BlerTable:
    grid = default_snr_grid() if grid is None else np.asarray(grid, dtype=float)
    rows = []
    for entry in mcs_table:
        values = synth_bler(entry, grid, steepness, offset_db, slope_db)
        rows.extend((entry.index, float(s), float(b)) for s, b in zip(grid, values))
    logger.debug(
        "Synthesized BLER table: %d MCS x %d SNR points (steepness=%s, offset=%s dB)",
        len(mcs_table), len(grid), steepness, offset_db,
    )
    return BlerTable.from_rows(rows)


# =============================================================================
# ERASURES
# =============================================================================

class UniformStream:
    """
    Buffered uniform draws from a numpy Generator. The k-th value handed out
    equals the k-th value of successive Generator.random() calls.
    """

    def __init__(self, rng: np.random.Generator, block: int = 8192):
        self._rng = rng
        self._block = block
        self._buffer: List[float] = []
        self._pos = 0

    def random(self) -> float:
        if self._pos >= len(self._buffer):
            self._buffer = self._rng.random(self._block).tolist()
            self._pos = 0
        value = self._buffer[self._pos]
        self._pos += 1
        return value


def sample_erasure(rng: Union[np.random.Generator, UniformStream], p: float) -> bool:
    """True (erased) with probability p; consumes exactly one uniform draw"""
    if not 0.0 <= p <= 1.0:
        raise ErasureDomainError(f"Erasure probability must be in [0, 1], got {p}")
    return rng.random() < p


# =============================================================================
# MCS TABLE I/O
# =============================================================================

def bits_per_tb(entry: McsEntry, resource_elements: int = settings.RESOURCE_ELEMENTS_PER_TB) -> float:
    return entry.spectral_efficiency * resource_elements


def _read_rows(path: Path, header: List[str]) -> Iterable[tuple[int, dict]]:
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as e:
        raise TableValidationError(path, f"cannot open: {e.strerror}") from e
    with handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != header:
            raise TableValidationError(path, f"expected header {','.join(header)}", line=1)
        for row in reader:
            yield reader.line_num, {k.strip(): (v or "").strip() for k, v in row.items() if k}


def load_mcs_table(path: Union[str, Path]) -> List[McsEntry]:
    path = Path(path)
    entries = []
    for line, row in _read_rows(path, MCS_HEADER):
        try:
            entries.append(McsEntry(
                index=int(row["index"]),
                modulation_order=int(row["modulation_order"]),
                code_rate=float(row["code_rate"]),
                spectral_efficiency=float(row["spectral_efficiency"]),
            ))
        except (ValueError, ValidationError) as e:
            raise TableValidationError(path, f"invalid MCS row: {e}", line=line) from e
    try:
        validated = validate_mcs_entries(entries)
    except ValueError as e:
        raise TableValidationError(path, str(e)) from e
    logger.debug("Loaded %d MCS entries from %s", len(validated), path)
    return validated


def default_mcs_table() -> List[McsEntry]:
    """TS 38.214 table 5.1.3.1-2 shipped as data"""
    return load_mcs_table(DEFAULT_MCS_TABLE_PATH)


# =============================================================================
# BLER TABLE I/O
# =============================================================================

def load_bler_table(path: Union[str, Path]) -> BlerTable:
    path = Path(path)
    rows = []
    seen: dict[tuple[int, float], int] = {}
    for line, row in _read_rows(path, BLER_HEADER):
        try:
            mcs = int(row["mcs_index"])
            snr_db = float(row["snr_db"])
            bler = float(row["bler"])
        except ValueError as e:
            raise TableValidationError(path, f"invalid BLER row: {e}", line=line) from e
        if not math.isfinite(snr_db):
            raise TableValidationError(path, f"SNR must be finite, got {snr_db}", line=line)
        if not 0.0 <= bler <= 1.0:
            raise TableValidationError(path, f"BLER must be in [0, 1], got {bler}", line=line)
        if (mcs, snr_db) in seen:
            raise TableValidationError(
                path, f"duplicate point (mcs={mcs}, snr={snr_db}), first on line {seen[(mcs, snr_db)]}",
                line=line,
            )
        seen[(mcs, snr_db)] = line
        rows.append((mcs, snr_db, bler))
    try:
        table = BlerTable.from_rows(rows)
    except ValidationError as e:
        raise TableValidationError(path, f"invalid BLER table: {e.errors()[0]['msg']}") from e
    logger.debug("Loaded BLER table for %d MCS from %s", len(table.entries), path)
    return table


def write_bler_table(table: BlerTable, path: Union[str, Path]) -> Path:
    return reports.write_csv(Path(path), BLER_HEADER, table.rows())
