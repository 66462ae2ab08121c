"""
Report Service
CSV and SVG emission for command outputs. Files are written atomically:
a temp file in the target directory is renamed over the final path.
"""
import csv
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

logger = logging.getLogger(__name__)

# SVG ids and metadata stay stable for a given seed
matplotlib.rcParams["svg.hashsalt"] = "servicetime-lab"
SVG_METADATA = {"Date": None, "Creator": None}


class ReportError(Exception):
    """Raised when an output file cannot be produced"""
    def __init__(self, message: str):
        self.message = message
        super().__init__(self.message)


# =============================================================================
# HELPERS
# =============================================================================

def format_value(value: Any) -> str:
    """Stable text for CSV cells: repr-precision floats, plain ints/strings"""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value  # Enum
    return str(value)


def _atomic_write(path: Path, write) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            write(handle)
        os.replace(tmp_name, path)
    except OSError as e:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise ReportError(f"Cannot write {path}: {e}") from e
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


# =============================================================================
# CSV
# =============================================================================

def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Header-first, comma-separated, UTF-8, no trailing delimiter"""
    def _write(handle):
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ReportError(
                    f"Row has {len(row)} cells, header has {len(header)}: {row!r}"
                )
            writer.writerow([format_value(v) for v in row])

    written = _atomic_write(path, _write)
    logger.info("Wrote %s", written)
    return written


# =============================================================================
# SVG
# =============================================================================

def write_line_plot(
    path: Path,
    series: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    title: str,
    xlabel: str,
    ylabel: str,
) -> Path:
    """Simple line chart; CSV stays the source of truth"""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    try:
        for label, (xs, ys) in series.items():
            ax.plot(list(xs), list(ys), label=label, linewidth=1.4)
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.grid(True, alpha=0.3)
        if series:
            ax.legend()
        fig.tight_layout()

        written = _atomic_write(
            path, lambda handle: fig.savefig(handle, format="svg", metadata=SVG_METADATA)
        )
    finally:
        plt.close(fig)
    logger.info("Wrote %s", written)
    return written
