"""
Manifest Service
Loads TOML run manifests, applies command-line overrides and resolves the
output directory and input tables.

Output directory precedence: --out flag > SERVICETIME_OUTPUT_DIR >
[run].out_dir > FALLBACK_OUTPUT_DIR.
"""
import logging
import tomllib
from pathlib import Path
from typing import List, Optional, Tuple, Union

from pydantic import ValidationError

from app.core.config import Settings, settings
from app.schemas.channel import BlerTable, McsEntry
from app.schemas.manifest import RunManifest
from app.services.channel import (
    TableValidationError,
    default_mcs_table,
    load_bler_table,
    load_mcs_table,
    synth_bler_table,
)

logger = logging.getLogger(__name__)

SECTIONS = ("run", "simulation", "analytic", "sweep", "sla", "figures")

EXIT_VALIDATION = 2
EXIT_RUN_FAILURE = 1


class ManifestError(Exception):
    """Manifest or input validation failure; carries the process exit code"""
    def __init__(self, message: str, exit_code: int = EXIT_VALIDATION):
        self.message = message
        self.exit_code = exit_code
        super().__init__(self.message)


def _format_validation(source: str, error: ValidationError) -> str:
    details = "; ".join(
        f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}"
        for err in error.errors()
    )
    return f"{source}: {details}"


def _read_toml(path: Path) -> dict:
    try:
        with open(path, "rb") as handle:
            return tomllib.load(handle)
    except FileNotFoundError as e:
        raise ManifestError(f"{path}: manifest not found") from e
    except tomllib.TOMLDecodeError as e:
        # message carries "(at line L, column C)"
        raise ManifestError(f"{path}: {e}") from e


def _resolve(base: Path, value: Optional[str]) -> Optional[str]:
    if value is None:
        return None
    path = Path(value).expanduser()
    return str(path if path.is_absolute() else (base / path).resolve())


def resolve_out_dir(
    flag: Optional[str],
    manifest_out: Optional[str],
    config: Settings = settings,
) -> Path:
    if flag:
        return Path(flag)
    if config.OUTPUT_DIR:
        return Path(config.OUTPUT_DIR)
    if manifest_out:
        return Path(manifest_out)
    return Path(config.FALLBACK_OUTPUT_DIR)


def load_manifest(
    path: Optional[Union[str, Path]] = None,
    out: Optional[str] = None,
    seed: Optional[int] = None,
    formats: Optional[List[str]] = None,
    config: Settings = settings,
) -> RunManifest:
    """
    Parse and validate a manifest. Without a path every section takes its
    defaults. Flags override file values.
    """
    data: dict = {}
    base = Path.cwd()
    source = "<defaults>"
    if path is not None:
        path = Path(path)
        data = _read_toml(path)
        base = path.resolve().parent
        source = str(path)
        unknown = sorted(set(data) - set(SECTIONS))
        if unknown:
            raise ManifestError(f"{path}: unknown section(s) {', '.join(unknown)}")

    run = dict(data.get("run", {}))
    run["out_dir"] = _resolve(base, run.get("out_dir"))
    run["mcs_csv"] = _resolve(base, run.get("mcs_csv"))
    run["bler_csv"] = _resolve(base, run.get("bler_csv"))
    if seed is not None:
        run["seed"] = seed
    if formats:
        run["formats"] = formats
    data = {**data, "run": run}

    try:
        manifest = RunManifest.model_validate(data)
        # build the SimConfig now so bad scheme/field pairings fail here
        manifest.sim_config()
    except ValidationError as e:
        raise ManifestError(_format_validation(source, e)) from e

    out_dir = resolve_out_dir(out, manifest.run.out_dir, config)
    manifest = manifest.model_copy(update={
        "source": Path(path) if path is not None else None,
        "out_dir": out_dir,
    })
    logger.debug("Loaded manifest %s -> output %s", source, out_dir)
    return manifest


def load_tables(manifest: RunManifest) -> Tuple[List[McsEntry], BlerTable]:
    """MCS table and BLER grid named by [run], with shipped/synthetic defaults"""
    try:
        if manifest.run.mcs_csv:
            mcs_table = load_mcs_table(manifest.run.mcs_csv)
        else:
            mcs_table = default_mcs_table()
        if manifest.run.bler_csv:
            bler_table = load_bler_table(manifest.run.bler_csv)
        else:
            bler_table = synth_bler_table(mcs_table)
    except TableValidationError as e:
        raise ManifestError(e.message) from e
    return mcs_table, bler_table


def ensure_out_dir(manifest: RunManifest) -> Path:
    try:
        manifest.out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ManifestError(f"Output directory {manifest.out_dir} is not writable: {e}") from e
    return manifest.out_dir
