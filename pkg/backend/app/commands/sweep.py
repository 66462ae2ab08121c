"""
Sweep command
MCS policy curves (min service time vs max throughput) over an SNR grid.
"""
from app.schemas.manifest import ReportFormat, RunManifest
from app.services import optimizer, reports
from app.services.manifest import ensure_out_dir, load_tables

NAME = "sweep"
HELP = "Per-SNR MCS choice under each policy; writes curves.csv"
HEADER = ["snr_db", "policy", "scheme", "chosen_mcs", "metric_value"]


def cmd_sweep(manifest: RunManifest) -> int:
    section = manifest.sweep
    mcs_table, table = load_tables(manifest)
    out_dir = ensure_out_dir(manifest)

    curves = optimizer.sweep(
        table, mcs_table, section.timing,
        (section.snr_lo, section.snr_hi, section.snr_step),
        section.schemes, section.policies, section.bler_cap, section.nc_k,
    )
    reports.write_csv(out_dir / "curves.csv", HEADER, optimizer.curve_rows(curves))

    if manifest.wants(ReportFormat.SVG):
        reports.write_line_plot(
            out_dir / "curves.svg",
            {f"{c.policy.value}/{c.scheme.value}": (c.snr_grid, c.chosen_mcs) for c in curves},
            title="Chosen MCS per policy", xlabel="SNR (dB)", ylabel="MCS index",
        )
    return 0
