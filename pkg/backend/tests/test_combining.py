"""
Combining Tests
Optimal weights, error variance and the power-scaling equivalence.
"""
import numpy as np
import pytest
from pydantic import ValidationError

from app.schemas.combining import SignalMoments
from app.services.combining import (
    CombiningError,
    effective_snr_equivalence,
    empirical_error_variance,
    error_variance,
    lsq_oracle,
    optimal_weight,
)

UNIT = SignalMoments(ex2=1.0, en2=1.0)


class TestClosedForms:
    """Test the MMSE weight and variance formulas"""

    @pytest.mark.parametrize("k,m,expected", [
        (1, UNIT, 0.5),
        (2, UNIT, 1 / 3),
        (5, SignalMoments(ex2=2.0, en2=1.0), 2 / 11),
    ])
    def test_optimal_weight(self, k, m, expected):
        """Test alpha = ex2 / (k ex2 + en2)"""
        assert optimal_weight(k, m) == pytest.approx(expected)

    @pytest.mark.parametrize("k,m,expected", [
        (1, UNIT, 0.5),
        (2, UNIT, 1 / 3),
        (8, SignalMoments(ex2=4.0, en2=2.0), 8 / 34),
    ])
    def test_error_variance(self, k, m, expected):
        """Test sigma_k^2 = ex2 en2 / (k ex2 + en2)"""
        assert error_variance(k, m) == pytest.approx(expected)

    def test_variance_strictly_decreasing(self):
        """Test more copies always reduce the error"""
        m = SignalMoments(ex2=0.7, en2=3.0)
        values = [error_variance(k, m) for k in range(1, 200)]
        assert all(b < a for a, b in zip(values, values[1:]))
        assert values[-1] < 0.02

    def test_single_copy(self):
        """Test k=1 is ex2 en2 / (ex2 + en2)"""
        m = SignalMoments(ex2=3.0, en2=5.0)
        assert error_variance(1, m) == pytest.approx(15.0 / 8.0)

    def test_rejects_zero_copies(self):
        """Test k < 1 raises"""
        with pytest.raises(CombiningError):
            optimal_weight(0, UNIT)

    def test_moments_must_be_positive(self):
        """Test zero or infinite moments are rejected"""
        with pytest.raises(ValidationError):
            SignalMoments(ex2=0.0, en2=1.0)
        with pytest.raises(ValidationError):
            SignalMoments(ex2=1.0, en2=float("inf"))


class TestOracle:
    """Test the closed forms against the normal-equation solve"""

    def test_unit_moments(self):
        """Test k=1 and k=2 at unit moments"""
        weights, variance = lsq_oracle(1, UNIT)
        np.testing.assert_allclose(weights, [0.5])
        assert variance == pytest.approx(0.5)
        weights, variance = lsq_oracle(2, UNIT)
        np.testing.assert_allclose(weights, [1 / 3, 1 / 3])
        assert variance == pytest.approx(1 / 3)

    def test_randomized_agreement(self):
        """Test 100 random (k, moments) cases to 1e-10 relative"""
        rng = np.random.default_rng(2024)
        for _ in range(100):
            k = int(rng.integers(1, 33))
            m = SignalMoments(ex2=float(rng.uniform(0.1, 10.0)), en2=float(rng.uniform(0.1, 10.0)))
            weights, variance = lsq_oracle(k, m)
            np.testing.assert_allclose(weights, optimal_weight(k, m), rtol=1e-10)
            assert variance == pytest.approx(error_variance(k, m), rel=1e-10)

    def test_rejects_large_k(self):
        """Test the oracle is capped at 32 copies"""
        with pytest.raises(CombiningError):
            lsq_oracle(33, UNIT)

    def test_monte_carlo_variance(self):
        """Test the sampled combiner MSE matches the closed form"""
        m = SignalMoments(ex2=2.0, en2=1.0)
        mse = empirical_error_variance(4, m, np.random.default_rng(5), samples=200_000)
        assert mse == pytest.approx(error_variance(4, m), rel=0.02)


class TestEquivalence:
    """Test k combined copies match one copy at k-fold power"""

    @pytest.mark.parametrize("k,m,expected", [
        (1, UNIT, 0.5),
        (2, UNIT, 1 / 3),
        (10, SignalMoments(ex2=3.0, en2=1.0), 1 / 31),
    ])
    def test_examples(self, k, m, expected):
        """Test both normalized variances at the worked points"""
        combined, scaled = effective_snr_equivalence(k, m)
        assert combined == pytest.approx(expected)
        assert scaled == pytest.approx(expected)

    def test_holds_numerically(self):
        """Test the two normalized variances agree to 1e-12"""
        rng = np.random.default_rng(9)
        for _ in range(100):
            k = int(rng.integers(1, 64))
            m = SignalMoments(ex2=float(rng.uniform(0.01, 100.0)), en2=float(rng.uniform(0.01, 100.0)))
            combined, scaled = effective_snr_equivalence(k, m)
            assert combined == pytest.approx(scaled, abs=1e-12)
