"""
Optimizer Service
Per-SNR MCS selection by expected service time or by throughput, and
sweeps producing one PolicyCurve per (policy, scheme).
"""
import logging
from typing import Iterable, List, Optional, Sequence, Tuple

from app.core.config import settings
from app.schemas.analytic import ServiceTimeEstimate, TimingParams
from app.schemas.channel import BlerTable, McsEntry
from app.schemas.optimizer import AnalyticScheme, McsChoice, Policy, PolicyCurve
from app.services import analytic
from app.services.channel import bits_per_tb, bler_lookup, snr_grid

logger = logging.getLogger(__name__)

# Largest block the NC calculator is asked to evaluate
NC_MAX_BLOCK = 10_000
DEFAULT_NC_K = 2


class OptimizerError(Exception):
    def __init__(self, message: str):
        self.message = message
        super().__init__(self.message)


class NoFeasibleMcsError(OptimizerError):
    def __init__(self, snr_db: float, reason: str):
        self.snr_db = snr_db
        super().__init__(f"No feasible MCS at {snr_db} dB: {reason}")


def evaluate_scheme(
    table: BlerTable,
    mcs: int,
    snr_db: float,
    timing: TimingParams,
    scheme: AnalyticScheme,
    nc_k: int,
) -> Tuple[ServiceTimeEstimate, float]:
    """(E[X], fraction of transmitted packets that carry new data)"""
    p = bler_lookup(table, mcs, snr_db)
    if scheme == AnalyticScheme.ARQ:
        return analytic.arq_expected_service_time(p, timing), 1.0
    if scheme == AnalyticScheme.HARQ:
        return analytic.harq_expected_service_time(table, mcs, snr_db, timing), 1.0
    if p >= 1.0:
        raise analytic.DivergenceError(f"MCS {mcs} never decodes at {snr_db} dB")
    code = analytic.redundancy_for_bler(nc_k, p)
    if code.n > NC_MAX_BLOCK:
        raise analytic.AnalyticError(f"Block of {code.n} packets needed at p={p}")
    return analytic.nc_expected_service_time(p, code, timing), code.rate


def _candidates(
    table: BlerTable,
    mcs_table: Sequence[McsEntry],
    snr_db: float,
    timing: TimingParams,
    scheme: AnalyticScheme,
    nc_k: int,
    bler_cap: Optional[float] = None,
) -> Iterable[Tuple[McsEntry, ServiceTimeEstimate, float]]:
    """Feasible MCS entries in ascending index order"""
    if not mcs_table:
        raise OptimizerError("MCS table is empty")
    for entry in mcs_table:
        if not table.has_mcs(entry.index):
            logger.debug("MCS %d has no BLER curve, skipped", entry.index)
            continue
        if bler_cap is not None and bler_lookup(table, entry.index, snr_db) > bler_cap:
            continue
        try:
            estimate, rate = evaluate_scheme(table, entry.index, snr_db, timing, scheme, nc_k)
        except analytic.AnalyticError as e:
            logger.debug("MCS %d infeasible at %s dB: %s", entry.index, snr_db, e.message)
            continue
        yield entry, estimate, rate


# =============================================================================
# POLICIES
# =============================================================================

def optimize_mcs_service_time(
    table: BlerTable,
    mcs_table: Sequence[McsEntry],
    snr_db: float,
    timing: TimingParams,
    scheme: AnalyticScheme,
    nc_k: int = DEFAULT_NC_K,
) -> McsChoice:
    """argmin E[X]; ties go to the lowest index"""
    best: Optional[McsChoice] = None
    for entry, estimate, _ in _candidates(table, mcs_table, snr_db, timing, scheme, nc_k):
        if best is None or estimate.expected_slots < best.value:
            best = McsChoice(mcs=entry.index, value=estimate.expected_slots)
    if best is None:
        raise NoFeasibleMcsError(snr_db, f"every MCS fails to converge under {scheme.value}")
    return best


def optimize_mcs_throughput(
    table: BlerTable,
    mcs_table: Sequence[McsEntry],
    snr_db: float,
    timing: TimingParams,
    scheme: AnalyticScheme,
    bler_cap: Optional[float] = None,
    nc_k: int = DEFAULT_NC_K,
    resource_elements: int = settings.RESOURCE_ELEMENTS_PER_TB,
    slot_seconds: float = settings.SLOT_SECONDS,
) -> McsChoice:
    """
    argmax bits_per_tb * rate / E[X] in bits/s, where rate is K/N for
    network coding and 1 otherwise. Ties go to the lowest index.
    """
    if bler_cap is not None and not 0.0 <= bler_cap <= 1.0:
        raise OptimizerError(f"bler_cap must be in [0, 1], got {bler_cap}")
    best: Optional[McsChoice] = None
    for entry, estimate, rate in _candidates(
        table, mcs_table, snr_db, timing, scheme, nc_k, bler_cap
    ):
        bits = bits_per_tb(entry, resource_elements) * rate
        value = analytic.throughput_from_service_time(estimate, bits, slot_seconds)
        if best is None or value > best.value:
            best = McsChoice(mcs=entry.index, value=value)
    if best is None:
        reason = f"bler_cap={bler_cap} excludes every MCS" if bler_cap is not None else "no MCS converges"
        raise NoFeasibleMcsError(snr_db, reason)
    return best


def link_adaptation_mcs(
    table: BlerTable,
    mcs_table: Sequence[McsEntry],
    snr_db: float,
    timing: TimingParams,
    scheme: AnalyticScheme = AnalyticScheme.HARQ,
    bler_cap: float = settings.DEFAULT_BLER_CAP,
) -> int:
    """
    Conventional link adaptation: throughput-optimal MCS whose first
    transmission meets bler_cap, else the most robust MCS in the table.
    """
    try:
        return optimize_mcs_throughput(table, mcs_table, snr_db, timing, scheme, bler_cap).mcs
    except NoFeasibleMcsError:
        robust = min(e.index for e in mcs_table if table.has_mcs(e.index))
        logger.debug("No MCS meets BLER cap %s at %s dB, falling back to MCS %d", bler_cap, snr_db, robust)
        return robust


# =============================================================================
# SWEEP
# =============================================================================

def sweep(
    table: BlerTable,
    mcs_table: Sequence[McsEntry],
    timing: TimingParams,
    snr_range: Tuple[float, float, float],
    schemes: Sequence[AnalyticScheme],
    policies: Sequence[Policy] = (Policy.MIN_SERVICE_TIME, Policy.MAX_THROUGHPUT),
    bler_cap: Optional[float] = None,
    nc_k: int = DEFAULT_NC_K,
) -> List[PolicyCurve]:
    lo, hi, step = snr_range
    grid = snr_grid(lo, hi, step).tolist()
    logger.info(
        "Sweeping %d SNR points x %d schemes x %d policies", len(grid), len(schemes), len(policies)
    )

    curves = []
    for policy in policies:
        for scheme in schemes:
            chosen, values = [], []
            for snr_db in grid:
                if policy == Policy.MIN_SERVICE_TIME:
                    choice = optimize_mcs_service_time(table, mcs_table, snr_db, timing, scheme, nc_k)
                else:
                    choice = optimize_mcs_throughput(
                        table, mcs_table, snr_db, timing, scheme, bler_cap, nc_k
                    )
                chosen.append(choice.mcs)
                values.append(choice.value)
            curves.append(PolicyCurve(
                policy=policy, scheme=scheme, snr_grid=grid, chosen_mcs=chosen, metric_values=values
            ))
    return curves


def curve_rows(curves: Sequence[PolicyCurve]) -> List[tuple]:
    """Rows of snr_db,policy,scheme,chosen_mcs,metric_value"""
    return [
        (snr, curve.policy, curve.scheme, mcs, value)
        for curve in curves
        for snr, mcs, value in zip(curve.snr_grid, curve.chosen_mcs, curve.metric_values)
    ]
