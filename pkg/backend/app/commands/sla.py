"""
SLA command
p99 service time of HARQ and the hijack scheme over an erasure-probability grid.
"""
import logging

from app.schemas.manifest import ReportFormat, RunManifest
from app.services import studies
from app.services.manifest import ensure_out_dir, load_tables

logger = logging.getLogger(__name__)

NAME = "sla"
HELP = "99th-percentile service times per erasure probability; writes sla.csv"


def cmd_sla(manifest: RunManifest) -> int:
    _, table = load_tables(manifest)
    out_dir = ensure_out_dir(manifest)

    study = studies.sla_study(manifest.sla, table, manifest.seed)
    studies.write_study(study, out_dir, svg=manifest.wants(ReportFormat.SVG))
    for p, ratio in studies.sla_ratios(study).items():
        logger.info("p=%s: HARQ p99 / NC p99 = %.3f", p, ratio)
    return 0
