"""
Figures command
Writes fig4.csv .. fig8.csv (and SVGs on request) plus a figures.csv digest.
"""
import logging

from app.schemas.manifest import ReportFormat, RunManifest
from app.services import studies
from app.services.manifest import ensure_out_dir, load_tables

logger = logging.getLogger(__name__)

NAME = "figures"
HELP = "Regenerate every comparison study; writes fig4..fig8 and figures.csv"


def cmd_figures(manifest: RunManifest) -> int:
    mcs_table, table = load_tables(manifest)
    out_dir = ensure_out_dir(manifest)
    section = manifest.figures
    seed = manifest.seed
    svg = manifest.wants(ReportFormat.SVG)

    fig4 = studies.mcs_policy_study(section, mcs_table, table)
    fig5 = studies.low_snr_study(section, mcs_table, table, seed)
    fig6 = studies.flight_size_study(section, mcs_table, table, seed)
    fig7 = studies.hijack_study(section, mcs_table, table, seed)
    fig8 = studies.sla_study(manifest.sla, table, seed)
    fig8.name = "fig8"

    for study in (fig4, fig5, fig6, fig7, fig8):
        studies.write_study(study, out_dir, svg=svg)

    digest = studies.digest(fig5, fig7, fig8)
    studies.write_study(digest, out_dir)
    for metric, value, reference in digest.rows:
        logger.info("%s = %.4f (reference %s)", metric, value, reference)
    return 0
