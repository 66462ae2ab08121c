"""
gen-bler command
Materializes the synthetic BLER family for the manifest's MCS table.
"""
from app.schemas.manifest import RunManifest
from app.services.channel import (
    TableValidationError,
    default_mcs_table,
    load_mcs_table,
    synth_bler_table,
    write_bler_table,
)
from app.services.manifest import ManifestError, ensure_out_dir

NAME = "gen-bler"
HELP = "Write a synthetic BLER table over the default SNR grid"
OUTPUT_NAME = "bler_table.csv"


def cmd_gen_bler(manifest: RunManifest) -> int:
    try:
        mcs_table = load_mcs_table(manifest.run.mcs_csv) if manifest.run.mcs_csv else default_mcs_table()
    except TableValidationError as e:
        raise ManifestError(e.message) from e
    out_dir = ensure_out_dir(manifest)
    write_bler_table(synth_bler_table(mcs_table), out_dir / OUTPUT_NAME)
    return 0
