"""
Pytest Configuration
Fixtures and helpers shared by the service tests.
"""
import pytest  # type: ignore[import-not-found]
import os
import sys
from pathlib import Path

# Add the backend directory to the path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.schemas.analytic import TimingParams
from app.schemas.channel import BlerTable, McsEntry
from app.services.channel import default_mcs_table, synth_bler_table


# =============================================================================
# TABLE HELPERS
# =============================================================================

def flat_table(p: float, mcs: int = 0, lo: float = -10.0, hi: float = 40.0) -> BlerTable:
    """BLER p at every SNR; HARQ combining has no effect on it"""
    return BlerTable.from_rows([(mcs, lo, p), (mcs, hi, p)])


def step_table() -> BlerTable:
    """
    At 0 dB: first attempt 0.5, second (3.01 dB) 0.1, third and later
    (>= 4.77 dB) 0.0.
    """
    return BlerTable.from_rows([
        (0, 0.0, 0.5),
        (0, 1.0, 0.1),
        (0, 3.5, 0.1),
        (0, 4.5, 0.0),
        (0, 40.0, 0.0),
    ])


def combining_table(p: float, mcs: int = 0) -> BlerTable:
    """
    At 0 dB: first attempt p, every combined retransmission (>= 3.01 dB)
    decodes.
    """
    return BlerTable.from_rows([
        (mcs, 0.0, p),
        (mcs, 2.5, p),
        (mcs, 3.0, 0.0),
        (mcs, 40.0, 0.0),
    ])


def make_mcs(index: int, modulation_order: int, code_rate: float) -> McsEntry:
    return McsEntry(
        index=index,
        modulation_order=modulation_order,
        code_rate=code_rate,
        spectral_efficiency=modulation_order * code_rate,
    )


# =============================================================================
# FIXTURES
# =============================================================================

@pytest.fixture(scope="session")
def mcs_table():
    """Shipped 256QAM MCS table"""
    return default_mcs_table()


@pytest.fixture(scope="session")
def synth_table(mcs_table):
    """Synthetic BLER family over the default -6..27 dB grid"""
    return synth_bler_table(mcs_table)


@pytest.fixture
def timing():
    return TimingParams(rtt=10.0, tau=1.0)


@pytest.fixture
def write_manifest(tmp_path):
    """Write a TOML manifest into tmp_path and return its path"""
    def _write(text: str, name: str = "manifest.toml") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return _write


@pytest.fixture(autouse=True)
def no_output_env(monkeypatch):
    """Keep a developer's SERVICETIME_OUTPUT_DIR out of the tests"""
    from app.core.config import settings
    monkeypatch.setattr(settings, "OUTPUT_DIR", None)
