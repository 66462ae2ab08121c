"""
Analytic Tests
Closed-form service times for ARQ, HARQ and block network coding.
"""
import logging

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.stats import binom

from app.core.config import settings
from app.schemas.analytic import NcCode, ServiceTimeEstimate, TimingParams
from app.services.analytic import (
    AnalyticError,
    DivergenceError,
    TruncationError,
    arq_expected_service_time,
    harq_attempt_distribution,
    harq_expected_service_time,
    nc_block_failure_prob,
    nc_branch_weights,
    nc_expected_service_time,
    redundancy_for_bler,
    redundancy_for_target,
    throughput_from_service_time,
)
from app.services.channel import bler_lookup

from tests.conftest import flat_table, step_table


# =============================================================================
# ARQ
# =============================================================================

class TestArq:
    """Test the ARQ geometric series"""

    def test_lossless(self, timing):
        """Test p=0 is exactly one RTT from a single term"""
        estimate = arq_expected_service_time(0.0, timing)
        assert estimate.expected_slots == 10.0
        assert estimate.terms_used == 1
        assert estimate.truncation_residual == 0.0

    @pytest.mark.parametrize("p,expected,tol", [
        (0.5, 20.0, 1e-6),
        (0.9, 100.0, 1e-4),
    ])
    def test_examples(self, timing, p, expected, tol):
        """Test RTT / (1 - p) at the worked points"""
        assert arq_expected_service_time(p, timing).expected_slots == pytest.approx(expected, abs=tol)

    def test_matches_closed_form(self, timing):
        """Test the truncated series tracks RTT / (1 - p) on [0, 0.99]"""
        for p in np.linspace(0.0, 0.99, 34):
            estimate = arq_expected_service_time(float(p), timing)
            assert estimate.expected_slots == pytest.approx(10.0 / (1.0 - p), rel=1e-9)
            assert estimate.truncation_residual < 1e-12

    def test_diverges_at_one(self, timing):
        """Test p=1 raises a divergence error"""
        with pytest.raises(DivergenceError):
            arq_expected_service_time(1.0, timing)

    def test_near_one_uses_closed_form(self, timing):
        """Test p close to 1 falls back to RTT/(1-p) past the term budget"""
        estimate = arq_expected_service_time(0.99999, timing)
        assert estimate.expected_slots == pytest.approx(10.0 / 1e-5, rel=1e-9)
        assert estimate.terms_used == settings.ARQ_MAX_TERMS
        assert estimate.truncation_residual == pytest.approx(0.99999 ** settings.ARQ_MAX_TERMS)

    def test_rejects_negative_p(self, timing):
        """Test probabilities below zero are rejected"""
        with pytest.raises(AnalyticError):
            arq_expected_service_time(-0.1, timing)


# =============================================================================
# HARQ
# =============================================================================

class TestHarq:
    """Test the HARQ expectation under effective-SNR combining"""

    def test_zero_bler_is_one_rtt(self, timing):
        """Test success on the first attempt gives exactly one RTT"""
        estimate = harq_expected_service_time(flat_table(0.0), 0, 0.0, timing)
        assert estimate.expected_slots == 10.0
        assert estimate.terms_used == 1

    def test_flat_table_equals_arq(self, timing):
        """Test combining on a flat curve reproduces ARQ"""
        harq = harq_expected_service_time(flat_table(0.5), 0, 3.0, timing)
        arq = arq_expected_service_time(0.5, timing)
        assert harq.expected_slots == pytest.approx(arq.expected_slots, rel=1e-12)

    def test_hand_expansion(self, timing):
        """Test 0.5*RTT + 0.45*2RTT + 0.05*3RTT = 1.55 RTT"""
        estimate = harq_expected_service_time(step_table(), 0, 0.0, timing)
        assert estimate.expected_slots == pytest.approx(15.5, abs=1e-12)
        assert estimate.terms_used == 3
        assert estimate.truncation_residual == 0.0

    def test_attempt_distribution(self):
        """Test success masses of the hand-built sequence"""
        success, survival = harq_attempt_distribution(step_table(), 0, 0.0, 4)
        np.testing.assert_allclose(success, [0.5, 0.45, 0.05, 0.0], atol=1e-12)
        np.testing.assert_allclose(survival, [0.5, 0.05, 0.0, 0.0], atol=1e-12)

    def test_truncation_error_carries_residual(self, timing):
        """Test a series that cannot converge in max_tx reports its residual"""
        with pytest.raises(TruncationError) as exc:
            harq_expected_service_time(flat_table(0.9), 0, 0.0, timing, max_tx=64)
        assert exc.value.residual == pytest.approx(0.9 ** 64)

    def test_never_worse_than_arq(self, synth_table, timing):
        """Test combining only helps on a monotone table"""
        for mcs in (0, 5, 12):
            for snr_db in (-6.0, -2.0, 2.0, 8.0):
                p = bler_lookup(synth_table, mcs, snr_db)
                try:
                    arq = arq_expected_service_time(p, timing)
                    harq = harq_expected_service_time(synth_table, mcs, snr_db, timing)
                except AnalyticError:
                    continue
                assert harq.expected_slots <= arq.expected_slots + 1e-9


# =============================================================================
# NETWORK CODING
# =============================================================================

class TestNetworkCoding:
    """Test the three-branch block-code expectation"""

    def test_lossless_is_rtt_plus_tau(self, timing):
        """Test p=0 leaves only the intact branch"""
        for code in (NcCode(k=1, n=1), NcCode(k=4, n=6), NcCode(k=10, n=10)):
            assert nc_expected_service_time(0.0, code, timing).expected_slots == pytest.approx(11.0)

    def test_single_packet_no_fec(self, timing):
        """Test K=N=1, p=0.5 gives 16.5 slots"""
        estimate = nc_expected_service_time(0.5, NcCode(k=1, n=1), timing)
        assert estimate.expected_slots == pytest.approx(16.5)

    def test_two_of_three(self, timing):
        """Test K=2, N=3, p=0.1 against a hand evaluation"""
        # 0.729*11 + 0.243*12.5 + 0.027*23.5 + 0.001*24.5
        estimate = nc_expected_service_time(0.1, NcCode(k=2, n=3), timing)
        assert estimate.expected_slots == pytest.approx(11.7155, abs=1e-9)

    def test_branch_weights_complete(self):
        """Test the three branch weights sum to one"""
        for p in (0.0, 0.01, 0.3, 0.75):
            for code in (NcCode(k=1, n=1), NcCode(k=3, n=4), NcCode(k=8, n=12), NcCode(k=50, n=80)):
                assert sum(nc_branch_weights(p, code)) == pytest.approx(1.0, abs=1e-12)

    def test_exceeds_rtt(self, timing):
        """Test every expectation sits above one RTT"""
        for p in (0.0, 0.2, 0.6):
            for code in (NcCode(k=2, n=2), NcCode(k=2, n=5)):
                assert nc_expected_service_time(p, code, timing).expected_slots > timing.rtt

    def test_redundancy_helps_until_air_time_dominates(self):
        """Test E[X] falls with N at K=4, p=0.2, RTT=100 up to N=8"""
        timing = TimingParams(rtt=100.0, tau=1.0)
        values = [nc_expected_service_time(0.2, NcCode(k=4, n=n), timing).expected_slots for n in range(4, 9)]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_large_block(self, timing):
        """Test N = 10^4 evaluates to a finite value"""
        estimate = nc_expected_service_time(0.1, NcCode(k=8000, n=10_000), timing)
        assert np.isfinite(estimate.expected_slots)

    def test_block_failure_prob(self):
        """Test failure with no redundancy is 1 - (1-p)^N"""
        assert nc_block_failure_prob(0.1, NcCode(k=3, n=3)) == pytest.approx(1 - 0.9 ** 3)
        assert nc_block_failure_prob(0.1, NcCode(k=2, n=3)) == pytest.approx(float(binom.sf(1, 3, 0.1)))

    def test_code_requires_n_ge_k(self):
        """Test n < k is rejected"""
        with pytest.raises(ValidationError):
            NcCode(k=4, n=3)


# =============================================================================
# REDUNDANCY SIZING
# =============================================================================

class TestRedundancy:
    """Test code sizing from an erasure probability"""

    @pytest.mark.parametrize("k,p,n", [(8, 0.0, 8), (8, 0.2, 10), (3, 0.25, 4)])
    def test_examples(self, k, p, n):
        """Test N = ceil(k / (1 - p)) at the worked points"""
        assert redundancy_for_bler(k, p) == NcCode(k=k, n=n)

    def test_smallest_covering_n(self):
        """Test (N-K)/N covers p and overshoots by less than 1/N"""
        for k in (1, 2, 5, 16):
            for p in np.linspace(0.0, 0.9, 19):
                code = redundancy_for_bler(k, float(p))
                fraction = (code.n - code.k) / code.n
                assert fraction >= p - 1e-12
                assert fraction - p < 1.0 / code.n

    def test_target_sizing(self):
        """Test k=4, p=0.05 needs N=7 for block failure <= 1e-3"""
        code = redundancy_for_target(4, 0.05, 1e-3)
        assert code.n == 7
        assert nc_block_failure_prob(0.05, code) <= 1e-3
        assert nc_block_failure_prob(0.05, NcCode(k=4, n=6)) > 1e-3

    def test_target_lossless(self):
        """Test p=0 needs no redundancy"""
        assert redundancy_for_target(4, 0.0).n == 4


# =============================================================================
# THROUGHPUT & TIMING
# =============================================================================

class TestThroughput:
    """Test the reciprocal service-time throughput"""

    def test_unit_case(self):
        """Test E[X]=10 slots, 1 bit, 1 s/slot -> 0.1 bit/s"""
        estimate = ServiceTimeEstimate(expected_slots=10.0)
        assert throughput_from_service_time(estimate, 1.0, 1.0) == pytest.approx(0.1)

    def test_scaled_case(self):
        """Test E[X]=20 slots, 1000 bits, 1 ms/slot -> 50 kbit/s"""
        estimate = ServiceTimeEstimate(expected_slots=20.0)
        assert throughput_from_service_time(estimate, 1000.0, 0.001) == pytest.approx(50_000.0)

    def test_reciprocal_law(self):
        """Test doubling the service time halves throughput"""
        one = throughput_from_service_time(ServiceTimeEstimate(expected_slots=7.0), 100.0, 0.5)
        two = throughput_from_service_time(ServiceTimeEstimate(expected_slots=14.0), 100.0, 0.5)
        assert two == pytest.approx(one / 2)

    def test_warns_on_large_tau(self, caplog):
        """Test tau >= rtt/10 is logged as a warning"""
        with caplog.at_level(logging.WARNING, logger="app.services.analytic"):
            nc_expected_service_time(0.1, NcCode(k=2, n=3), TimingParams(rtt=10.0, tau=2.0))
        assert any("not small against rtt" in r.message for r in caplog.records)
