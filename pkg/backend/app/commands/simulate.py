"""
Simulate command
Runs the [simulation] scheme and writes per-packet records plus a summary.
"""
import numpy as np

from app.schemas.manifest import ReportFormat, RunManifest
from app.services import reports, simulator
from app.services.manifest import ensure_out_dir, load_tables

NAME = "simulate"
HELP = "Monte Carlo run of one scheme; writes records.csv and summary.csv"
SUMMARY_HEADER = ["scheme", "mean_slots", "p99_slots", "throughput", "fail_rate"]


def cmd_simulate(manifest: RunManifest) -> int:
    config = manifest.sim_config()
    _, table = load_tables(manifest)
    out_dir = ensure_out_dir(manifest)

    result = simulator.run(config, table)
    simulator.write_records_csv(result, out_dir / "records.csv")
    stats = result.stats
    reports.write_csv(
        out_dir / "summary.csv",
        SUMMARY_HEADER,
        [(
            config.scheme,
            stats.mean_service_slots,
            stats.p99_service_slots,
            stats.throughput_packets_per_slot,
            stats.fail_rate,
        )],
    )

    if manifest.wants(ReportFormat.SVG) and len(result):
        service = np.sort(result.service_slots)
        cdf = np.arange(1, service.size + 1) / service.size
        reports.write_line_plot(
            out_dir / "service_cdf.svg",
            {config.scheme.value: (service.tolist(), cdf.tolist())},
            title=f"Service time CDF ({config.scheme.value})",
            xlabel="Service time (slots)", ylabel="P(X <= x)",
        )
    return 0
