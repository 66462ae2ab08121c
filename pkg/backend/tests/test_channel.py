"""
Channel Tests
MCS/BLER table validation and ingestion, SNR conversions, HARQ failure
curves, the synthetic BLER family and erasure sampling.
"""
import math

import numpy as np
import pytest
from pydantic import ValidationError

from app.schemas.channel import BlerTable, McsEntry, SnrDomain, SnrValue
from app.services.channel import (
    BlerLookupError,
    ErasureDomainError,
    TableValidationError,
    UniformStream,
    bits_per_tb,
    bler_lookup,
    db_to_linear,
    effective_snr_db,
    harq_attempt_failure_prob,
    harq_failure_curve,
    linear_to_db,
    load_bler_table,
    load_mcs_table,
    sample_erasure,
    snr_for_bler,
    snr_grid,
    synth_bler,
    synth_bler_table,
    synth_threshold_db,
    write_bler_table,
)

from tests.conftest import flat_table, make_mcs, step_table


# =============================================================================
# MCS TABLE
# =============================================================================

class TestMcsTable:
    """Test MCS entries and the shipped table"""

    def test_default_table_shape(self, mcs_table):
        """Test the shipped table has indices 0..27 with rising efficiency"""
        assert [e.index for e in mcs_table] == list(range(28))
        efficiencies = [e.spectral_efficiency for e in mcs_table]
        assert all(b > a for a, b in zip(efficiencies, efficiencies[1:]))
        assert mcs_table[0].modulation_order == 2
        assert mcs_table[27].spectral_efficiency == pytest.approx(7.40625)

    def test_efficiency_must_match_rate(self):
        """Test SE != Qm x rate is rejected"""
        with pytest.raises(ValidationError):
            McsEntry(index=0, modulation_order=2, code_rate=0.5, spectral_efficiency=1.5)

    def test_efficiency_above_modulation_order(self):
        """Test SE above Qm is rejected"""
        with pytest.raises(ValidationError):
            McsEntry(index=0, modulation_order=2, code_rate=1.0, spectral_efficiency=2.5)

    def test_load_rejects_descending_indices(self, tmp_path):
        """Test MCS indices must ascend"""
        path = tmp_path / "mcs.csv"
        path.write_text(
            "index,modulation_order,code_rate,spectral_efficiency\n"
            "1,2,0.5,1.0\n"
            "0,2,0.25,0.5\n"
        )
        with pytest.raises(TableValidationError):
            load_mcs_table(path)

    def test_load_names_bad_line(self, tmp_path):
        """Test a malformed row is reported with its line number"""
        path = tmp_path / "mcs.csv"
        path.write_text(
            "index,modulation_order,code_rate,spectral_efficiency\n"
            "0,2,0.25,0.5\n"
            "1,two,0.5,1.0\n"
        )
        with pytest.raises(TableValidationError) as exc:
            load_mcs_table(path)
        assert exc.value.line == 3
        assert "mcs.csv:3" in exc.value.message

    def test_bits_per_tb(self):
        """Test bits per TB scale with spectral efficiency"""
        entry = make_mcs(0, 4, 0.5)
        assert bits_per_tb(entry, resource_elements=1000) == pytest.approx(2000.0)


# =============================================================================
# BLER TABLE
# =============================================================================

class TestBlerTable:
    """Test BLER grid validation and lookup"""

    def test_interpolates_in_db(self):
        """Test linear interpolation between grid points"""
        table = BlerTable.from_rows([(0, 0.0, 0.4), (0, 2.0, 0.2)])
        assert bler_lookup(table, 0, 1.0) == pytest.approx(0.3)

    def test_quarter_point(self):
        """Test 0.25 dB between (0, 0.5) and (1, 0.1) is 0.4"""
        table = BlerTable.from_rows([(0, 0.0, 0.5), (0, 1.0, 0.1)])
        assert bler_lookup(table, 0, 0.25) == pytest.approx(0.4)
        assert bler_lookup(table, 0, 1.0) == 0.1

    def test_clamps_outside_grid(self):
        """Test lookups beyond the grid take the edge value"""
        table = BlerTable.from_rows([(0, 0.0, 0.4), (0, 2.0, 0.2)])
        assert bler_lookup(table, 0, -50.0) == pytest.approx(0.4)
        assert bler_lookup(table, 0, 50.0) == pytest.approx(0.2)

    def test_unknown_mcs(self):
        """Test lookup of a missing MCS names the index"""
        table = flat_table(0.1, mcs=3)
        with pytest.raises(BlerLookupError) as exc:
            bler_lookup(table, 5, 0.0)
        assert exc.value.mcs == 5

    def test_rejects_increasing_bler(self):
        """Test BLER must not rise with SNR"""
        with pytest.raises(ValidationError):
            BlerTable.from_rows([(0, 0.0, 0.1), (0, 1.0, 0.2)])

    def test_rows_any_order(self):
        """Test rows are sorted by SNR per MCS"""
        table = BlerTable.from_rows([(1, 2.0, 0.1), (0, 1.0, 0.3), (1, 0.0, 0.5), (0, 0.0, 0.6)])
        assert table.mcs_indices == [0, 1]
        assert [p.snr_db for p in table.entries[1]] == [0.0, 2.0]

    def test_load_rejects_duplicates(self, tmp_path):
        """Test duplicate (mcs, snr) points are rejected with the line"""
        path = tmp_path / "bler.csv"
        path.write_text("mcs_index,snr_db,bler\n0,0.0,0.5\n0,1.0,0.4\n0,0.0,0.3\n")
        with pytest.raises(TableValidationError) as exc:
            load_bler_table(path)
        assert exc.value.line == 4

    def test_load_rejects_out_of_range_bler(self, tmp_path):
        """Test BLER outside [0, 1] is rejected"""
        path = tmp_path / "bler.csv"
        path.write_text("mcs_index,snr_db,bler\n0,0.0,1.5\n")
        with pytest.raises(TableValidationError) as exc:
            load_bler_table(path)
        assert exc.value.line == 2

    def test_load_rejects_bad_header(self, tmp_path):
        """Test the header is checked"""
        path = tmp_path / "bler.csv"
        path.write_text("mcs,snr,bler\n0,0.0,0.5\n")
        with pytest.raises(TableValidationError):
            load_bler_table(path)

    def test_missing_file(self, tmp_path):
        """Test a missing file names the path"""
        with pytest.raises(TableValidationError) as exc:
            load_bler_table(tmp_path / "nope.csv")
        assert "nope.csv" in exc.value.message


# =============================================================================
# SNR
# =============================================================================

class TestSnr:
    """Test SNR conversions and grids"""

    @pytest.mark.parametrize("snr_db,linear,tol", [(0.0, 1.0, 1e-15), (10.0, 10.0, 1e-12), (3.0103, 2.0, 1e-4)])
    def test_db_to_linear(self, snr_db, linear, tol):
        """Test anchor points of the dB scale"""
        assert db_to_linear(snr_db) == pytest.approx(linear, abs=tol)

    def test_db_linear_round_trip(self):
        """Test dB -> linear -> dB is the identity"""
        for snr_db in (-6.0, 0.0, 3.0, 27.0):
            assert linear_to_db(db_to_linear(snr_db)) == pytest.approx(snr_db)

    def test_snr_value_round_trip(self):
        """Test SnrValue conversions"""
        value = SnrValue(value=10.0).to_linear()
        assert value.domain == SnrDomain.LINEAR
        assert value.value == pytest.approx(10.0)
        assert value.to_db().value == pytest.approx(10.0)

    def test_linear_must_be_positive(self):
        """Test non-positive linear SNR is rejected"""
        with pytest.raises(ValidationError):
            SnrValue(value=0.0, domain=SnrDomain.LINEAR)

    def test_effective_snr_doubles_power(self):
        """Test two combined receptions add ~3.01 dB"""
        assert effective_snr_db(0.0, 2) == pytest.approx(10 * math.log10(2))

    def test_default_grid_size(self):
        """Test -6..27 dB in 0.1 dB steps gives 331 points"""
        grid = snr_grid(-6.0, 27.0, 0.1)
        assert grid.size == 331
        assert grid[0] == -6.0
        assert grid[-1] == 27.0

    def test_degenerate_grid(self):
        """Test a zero-width range gives one point"""
        assert snr_grid(0.0, 0.0, 0.1).tolist() == [0.0]


# =============================================================================
# HARQ FAILURE CURVE
# =============================================================================

class TestHarqFailure:
    """Test per-attempt failure probabilities under combining"""

    def test_step_table_sequence(self):
        """Test the hand-built table yields 0.5, 0.1, 0, 0"""
        curve = harq_failure_curve(step_table(), 0, 0.0, 4)
        np.testing.assert_allclose(curve, [0.5, 0.1, 0.0, 0.0], atol=1e-12)

    def test_flat_table_is_constant(self):
        """Test combining has no effect on a flat curve"""
        curve = harq_failure_curve(flat_table(0.3), 0, 5.0, 10)
        np.testing.assert_allclose(curve, 0.3)

    def test_fourth_attempt_gains_six_db(self, synth_table):
        """Test attempt 4 at -6 dB reads the curve at +0.0206 dB"""
        expected = bler_lookup(synth_table, 3, -6.0 + 10 * math.log10(4))
        assert harq_attempt_failure_prob(synth_table, 3, -6.0, 4) == pytest.approx(expected)
        assert harq_attempt_failure_prob(synth_table, 3, -6.0, 1) == bler_lookup(synth_table, 3, -6.0)

    def test_attempt_prob_matches_curve(self, synth_table):
        """Test the scalar accessor agrees with the vector curve"""
        curve = harq_failure_curve(synth_table, 10, 4.0, 5)
        for attempt in range(1, 6):
            assert harq_attempt_failure_prob(synth_table, 10, 4.0, attempt) == pytest.approx(curve[attempt - 1])

    def test_failure_non_increasing(self, synth_table):
        """Test later attempts never fail more often"""
        curve = harq_failure_curve(synth_table, 15, 2.0, 16)
        assert np.all(np.diff(curve) <= 1e-15)


# =============================================================================
# SYNTHETIC BLER
# =============================================================================

class TestSynthBler:
    """Test the logistic BLER family"""

    def test_midpoint_and_slope(self):
        """Test 0.5 at the threshold and 1/(1+e^2) one dB above at steepness 2"""
        entry = make_mcs(0, 2, 0.5)
        s0 = synth_threshold_db(entry)
        assert synth_bler(entry, s0) == pytest.approx(0.5)
        assert synth_bler(entry, s0 + 1.0, steepness=2.0) == pytest.approx(1 / (1 + math.exp(2)))
        assert synth_bler(entry, 1e6) == pytest.approx(0.0, abs=1e-300)

    def test_values_in_open_interval(self):
        """Test every synthetic value lies in (0, 1) at moderate SNR"""
        entry = make_mcs(0, 2, 0.1171875)
        values = synth_bler(entry, np.linspace(-6, 6, 50))
        assert np.all((values > 0) & (values < 1))

    def test_monotone_in_snr_and_mcs(self, mcs_table):
        """Test BLER falls with SNR and rises with MCS"""
        low, high = mcs_table[0], mcs_table[27]
        assert synth_bler(low, 0.0) > synth_bler(low, 1.0)
        assert synth_bler(high, 10.0) > synth_bler(low, 10.0)

    def test_robust_mcs_near_threshold_at_grid_start(self, mcs_table):
        """Test MCS 0 is usable but lossy at -6 dB"""
        assert 0.2 < synth_bler(mcs_table[0], -6.0) < 0.4

    def test_table_has_331_points_per_mcs(self, synth_table):
        """Test the default grid is materialized per MCS"""
        assert synth_table.mcs_indices == list(range(28))
        assert all(len(points) == 331 for points in synth_table.entries.values())

    def test_table_round_trip(self, mcs_table, tmp_path):
        """Test a written table reloads without validation errors"""
        table = synth_bler_table(mcs_table[:3], grid=snr_grid(-6.0, 0.0, 0.5))
        path = write_bler_table(table, tmp_path / "bler.csv")
        reloaded = load_bler_table(path)
        assert reloaded.mcs_indices == [0, 1, 2]
        assert bler_lookup(reloaded, 1, -3.0) == pytest.approx(bler_lookup(table, 1, -3.0))

    def test_snr_for_bler_inverts_lookup(self, synth_table):
        """Test the inverse lookup lands on the requested BLER"""
        snr_db = snr_for_bler(synth_table, 4, 0.1)
        assert bler_lookup(synth_table, 4, snr_db) == pytest.approx(0.1, abs=1e-6)

    def test_snr_for_zero_bler_clamps(self, synth_table):
        """Test BLER 0 maps to the top of the grid"""
        assert snr_for_bler(synth_table, 0, 0.0) == pytest.approx(27.0)


# =============================================================================
# ERASURES
# =============================================================================

class TestErasures:
    """Test Bernoulli erasure sampling"""

    def test_extremes(self):
        """Test p=0 never erases and p=1 always erases"""
        rng = np.random.default_rng(1)
        assert not any(sample_erasure(rng, 0.0) for _ in range(1000))
        assert all(sample_erasure(rng, 1.0) for _ in range(1000))

    def test_rejects_out_of_range(self):
        """Test probabilities outside [0, 1] raise"""
        rng = np.random.default_rng(1)
        with pytest.raises(ErasureDomainError):
            sample_erasure(rng, 1.2)
        with pytest.raises(ErasureDomainError):
            sample_erasure(rng, -0.1)

    def test_stream_matches_generator(self):
        """Test buffered draws equal successive Generator.random() calls"""
        direct = np.random.default_rng(42)
        stream = UniformStream(np.random.default_rng(42), block=7)
        assert [stream.random() for _ in range(30)] == [direct.random() for _ in range(30)]

    def test_erasure_rate(self):
        """Test the empirical erasure rate is close to p"""
        stream = UniformStream(np.random.default_rng(3))
        erased = sum(sample_erasure(stream, 0.25) for _ in range(40_000))
        assert erased / 40_000 == pytest.approx(0.25, abs=0.01)
