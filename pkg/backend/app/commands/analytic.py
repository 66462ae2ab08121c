"""
Analytic command
Evaluates the closed-form expected service times over an SNR grid.
"""
import logging

from app.schemas.manifest import ReportFormat, RunManifest
from app.services import reports
from app.services.analytic import AnalyticError
from app.services.channel import snr_grid
from app.services.manifest import ensure_out_dir, load_tables
from app.services.optimizer import evaluate_scheme

logger = logging.getLogger(__name__)

NAME = "analytic"
HELP = "Closed-form expected service times per scheme over an SNR grid"
HEADER = ["scheme", "snr_db", "mcs", "expected_slots", "residual"]


def cmd_analytic(manifest: RunManifest) -> int:
    section = manifest.analytic
    _, table = load_tables(manifest)
    out_dir = ensure_out_dir(manifest)
    timing = section.timing
    grid = snr_grid(section.snr_lo, section.snr_hi, section.snr_step).tolist()

    rows = []
    series = {}
    for scheme in section.schemes:
        xs, ys = [], []
        for snr_db in grid:
            try:
                estimate, _ = evaluate_scheme(table, section.mcs, snr_db, timing, scheme, section.nc_k)
            except AnalyticError as e:
                logger.warning("%s at %s dB skipped: %s", scheme.value, snr_db, e.message)
                continue
            rows.append((scheme, snr_db, section.mcs, estimate.expected_slots, estimate.truncation_residual))
            xs.append(snr_db)
            ys.append(estimate.expected_slots)
        series[scheme.value] = (xs, ys)

    reports.write_csv(out_dir / "analytic.csv", HEADER, rows)
    if manifest.wants(ReportFormat.SVG):
        reports.write_line_plot(
            out_dir / "analytic.svg", series,
            title=f"Expected service time, MCS {section.mcs}, RTT {section.rtt:g} slots",
            xlabel="SNR (dB)", ylabel="E[X] (slots)",
        )
    return 0
