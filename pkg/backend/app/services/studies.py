"""
Study Service
Multi-run comparisons behind the sla and figures commands: MCS policies,
NC vs HARQ at low SNR, small vs large flight size, the hijack scheme and
the p99 service-level comparison.

Every run inside a study reuses the manifest seed, so schemes and grid
points are compared on paired random streams.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import settings
from app.schemas.analytic import NcCode, TimingParams
from app.schemas.channel import BlerTable, McsEntry
from app.schemas.manifest import FiguresSection, SlaSection
from app.schemas.optimizer import AnalyticScheme
from app.schemas.simulation import Scheme, SimConfig, SimResult
from app.services import optimizer, reports, simulator
from app.services.analytic import redundancy_for_bler, redundancy_for_target
from app.services.channel import bler_lookup, snr_for_bler, snr_grid

logger = logging.getLogger(__name__)

Series = Dict[str, Tuple[List[float], List[float]]]

# Reference values quoted for the low-SNR reduction and the p99 ratio
REFERENCE_LOW_SNR_REDUCTION = 0.07
REFERENCE_SLA_RATIO = 2.0
REFERENCE_THROUGHPUT_RATIO = 0.95
SLA_RATIO_RANGE = (0.05, 0.3)


@dataclass
class StudyTable:
    """Rows for one CSV plus the series for its optional plot"""
    name: str
    header: List[str]
    rows: List[tuple] = field(default_factory=list)
    series: Series = field(default_factory=dict)
    title: str = ""
    xlabel: str = "SNR (dB)"
    ylabel: str = "Mean service time (slots)"

    def add_point(self, label: str, x: float, y: float) -> None:
        xs, ys = self.series.setdefault(label, ([], []))
        xs.append(x)
        ys.append(y)

    def column(self, name: str) -> np.ndarray:
        idx = self.header.index(name)
        return np.array([row[idx] for row in self.rows], dtype=float)


def _config(scheme: Scheme, mcs: int, snr_db: float, rtt: int, processes: int,
            num_packets: int, seed: int, code: Optional[NcCode] = None) -> SimConfig:
    return SimConfig(
        scheme=scheme,
        rtt_slots=rtt,
        tau_slots=1,
        num_harq_processes=processes,
        unlocked=processes > settings.HARQ_PROCESS_CAP,
        code=code,
        mcs=mcs,
        snr_db=snr_db,
        num_packets=num_packets,
        seed=seed,
    )


def _link_adapted(mcs_table: Sequence[McsEntry], table: BlerTable, snr_db: float, rtt: int) -> Tuple[int, float]:
    timing = TimingParams(rtt=rtt, tau=1.0)
    mcs = optimizer.link_adaptation_mcs(table, mcs_table, snr_db, timing)
    return mcs, bler_lookup(table, mcs, snr_db)


def _grid(section: FiguresSection) -> List[float]:
    return snr_grid(section.snr_lo, section.snr_hi, section.snr_step).tolist()


# =============================================================================
# SLA
# =============================================================================

def sla_study(section: SlaSection, table: BlerTable, seed: int) -> StudyTable:
    """
    p99 service time of HARQ and the hijack scheme per erasure probability.
    Both run at the SNR where the first attempt fails with probability p;
    the code is sized for block failure <= max_failure.
    """
    study = StudyTable(
        name="sla",
        header=["p_erasure", "scheme", "p99_slots"],
        title="99th percentile service time",
        xlabel="Erasure probability",
        ylabel="p99 service time (slots)",
    )
    for p in section.p_grid:
        snr_db = snr_for_bler(table, section.mcs, p)
        code = redundancy_for_target(section.k, p, section.max_failure)
        runs = (
            (Scheme.HARQ, None),
            (Scheme.NC_HIJACK, code),
        )
        for scheme, scheme_code in runs:
            config = SimConfig(
                scheme=scheme,
                rtt_slots=section.rtt_slots,
                tau_slots=section.tau_slots,
                num_harq_processes=section.num_harq_processes,
                code=scheme_code,
                mcs=section.mcs,
                snr_db=snr_db,
                num_packets=section.num_packets,
                seed=seed,
            )
            result = simulator.run(config, table)
            study.rows.append((p, scheme, result.p99_service_slots))
            study.add_point(scheme.value, p, result.p99_service_slots)
        logger.info("SLA p=%s: snr %.2f dB, code (%d, %d)", p, snr_db, code.k, code.n)
    return study


def sla_ratios(study: StudyTable) -> Dict[float, float]:
    """HARQ p99 / NC p99 per erasure probability"""
    by_scheme: Dict[Scheme, Dict[float, float]] = {}
    for p, scheme, p99 in study.rows:
        by_scheme.setdefault(scheme, {})[p] = p99
    harq, nc = by_scheme.get(Scheme.HARQ, {}), by_scheme.get(Scheme.NC_HIJACK, {})
    return {p: harq[p] / nc[p] for p in sorted(harq) if p in nc}


# =============================================================================
# FIGURE ANALOGUES
# =============================================================================

def mcs_policy_study(section: FiguresSection, mcs_table: Sequence[McsEntry], table: BlerTable) -> StudyTable:
    """Service-time vs throughput MCS choice under HARQ"""
    curves = optimizer.sweep(
        table, mcs_table, TimingParams(rtt=section.rtt_slots, tau=1.0),
        (section.snr_lo, section.snr_hi, section.snr_step), [AnalyticScheme.HARQ],
    )
    study = StudyTable(
        name="fig4",
        header=["snr_db", "policy", "scheme", "chosen_mcs", "metric_value"],
        rows=optimizer.curve_rows(curves),
        title="MCS chosen for service time vs throughput (HARQ)",
        ylabel="MCS index",
    )
    for curve in curves:
        study.series[curve.policy.value] = (list(curve.snr_grid), [float(m) for m in curve.chosen_mcs])
    return study


def _compare_nc_harq(
    mcs: int, snr_db: float, code: NcCode, rtt: int, processes: int, packets: int, seed: int, table: BlerTable
) -> Tuple[SimResult, SimResult]:
    harq = simulator.run(_config(Scheme.HARQ, mcs, snr_db, rtt, processes, packets, seed), table)
    nc = simulator.run(_config(Scheme.NC_BLOCK, mcs, snr_db, rtt, processes, packets, seed, code), table)
    return harq, nc


def low_snr_study(
    section: FiguresSection, mcs_table: Sequence[McsEntry], table: BlerTable, seed: int
) -> StudyTable:
    """Block NC (redundancy matched to the BLER) against HARQ at link-adapted MCS"""
    study = StudyTable(
        name="fig5",
        header=["snr_db", "mcs", "bler", "k", "n", "harq_mean", "harq_se", "nc_mean", "nc_se", "reduction"],
        title="Mean service time, NC vs HARQ",
    )
    processes = settings.HARQ_PROCESS_CAP
    for snr_db in _grid(section):
        mcs, p = _link_adapted(mcs_table, table, snr_db, section.rtt_slots)
        code = redundancy_for_bler(section.nc_k, p)
        if code.n > processes:
            logger.warning("Skipping %s dB: block of %d exceeds %d processes", snr_db, code.n, processes)
            continue
        harq, nc = _compare_nc_harq(
            mcs, snr_db, code, section.rtt_slots, processes, section.packets_per_point, seed, table
        )
        reduction = (harq.mean_service_slots - nc.mean_service_slots) / harq.mean_service_slots
        study.rows.append((
            snr_db, mcs, p, code.k, code.n,
            harq.mean_service_slots, harq.stats.std_error_slots,
            nc.mean_service_slots, nc.stats.std_error_slots, reduction,
        ))
        study.add_point("harq", snr_db, harq.mean_service_slots)
        study.add_point("nc", snr_db, nc.mean_service_slots)
    return study


def flight_size_study(
    section: FiguresSection, mcs_table: Sequence[McsEntry], table: BlerTable, seed: int
) -> StudyTable:
    """HARQ - NC gap with one TB per slot at a small and a large flight size"""
    small, large = settings.HARQ_PROCESS_CAP, section.large_flight
    study = StudyTable(
        name="fig6",
        header=[
            "snr_db", "mcs", "k", "n",
            f"harq_{small}", f"nc_{small}", f"gap_{small}",
            f"harq_{large}", f"nc_{large}", f"gap_{large}",
        ],
        title=f"HARQ - NC gap, {small} vs {large} TBs per RTT",
        ylabel="HARQ - NC mean service time (slots)",
    )
    for snr_db in _grid(section):
        mcs, p = _link_adapted(mcs_table, table, snr_db, small)
        code = redundancy_for_bler(section.nc_k, p)
        if code.n > small:
            logger.warning("Skipping %s dB: block of %d exceeds %d processes", snr_db, code.n, small)
            continue
        row: List = [snr_db, mcs, code.k, code.n]
        for flight in (small, large):
            harq, nc = _compare_nc_harq(
                mcs, snr_db, code, flight, flight, section.packets_per_point, seed, table
            )
            gap = harq.mean_service_slots - nc.mean_service_slots
            row.extend([harq.mean_service_slots, nc.mean_service_slots, gap])
            study.add_point(f"{flight} TB/RTT", snr_db, gap)
        study.rows.append(tuple(row))
    return study


def hijack_study(
    section: FiguresSection, mcs_table: Sequence[McsEntry], table: BlerTable, seed: int
) -> StudyTable:
    """Hijack scheme at code rate hijack_k/hijack_n against HARQ"""
    code = NcCode(k=section.hijack_k, n=section.hijack_n)
    processes = settings.HARQ_PROCESS_CAP
    study = StudyTable(
        name="fig7",
        header=["snr_db", "mcs", "harq_mean", "hijack_mean", "harq_throughput", "hijack_throughput"],
        title=f"Hijack at code rate {code.k}/{code.n} vs HARQ",
    )
    for snr_db in _grid(section):
        mcs, _ = _link_adapted(mcs_table, table, snr_db, section.rtt_slots)
        harq = simulator.run(
            _config(Scheme.HARQ, mcs, snr_db, section.rtt_slots, processes, section.packets_per_point, seed),
            table,
        )
        hijack = simulator.run(
            _config(Scheme.NC_HIJACK, mcs, snr_db, section.rtt_slots, processes,
                    section.packets_per_point, seed, code),
            table,
        )
        study.rows.append((
            snr_db, mcs, harq.mean_service_slots, hijack.mean_service_slots,
            harq.throughput_packets_per_slot, hijack.throughput_packets_per_slot,
        ))
        study.add_point("harq", snr_db, harq.mean_service_slots)
        study.add_point("hijack", snr_db, hijack.mean_service_slots)
    return study


def digest(fig5: StudyTable, fig7: StudyTable, fig8: StudyTable) -> StudyTable:
    """Observed headline ratios next to their reference values"""
    study = StudyTable(name="figures", header=["metric", "value", "reference"])

    if fig5.rows:
        snr = fig5.column("snr_db")
        cutoff = snr.min() + (snr.max() - snr.min()) / 3.0
        low = fig5.column("reduction")[snr <= cutoff + 1e-9]
        study.rows.append(("nc_max_low_snr_reduction", float(low.max()), REFERENCE_LOW_SNR_REDUCTION))

    if fig7.rows:
        ratio = fig7.column("hijack_throughput") / fig7.column("harq_throughput")
        study.rows.append(("hijack_min_throughput_ratio", float(ratio.min()), REFERENCE_THROUGHPUT_RATIO))

    lo, hi = SLA_RATIO_RANGE
    ratios = [r for p, r in sla_ratios(fig8).items() if lo <= p <= hi]
    if ratios:
        study.rows.append(("sla_p99_ratio_mean", float(np.mean(ratios)), REFERENCE_SLA_RATIO))
    return study


def write_study(study: StudyTable, out_dir: Path, svg: bool = False) -> List[Path]:
    written = [reports.write_csv(out_dir / f"{study.name}.csv", study.header, study.rows)]
    if svg and study.series:
        written.append(reports.write_line_plot(
            out_dir / f"{study.name}.svg", study.series,
            title=study.title, xlabel=study.xlabel, ylabel=study.ylabel,
        ))
    return written
