"""
Analytic Service
Closed-form expected service times for ARQ, HARQ and block network coding,
plus redundancy sizing and throughput conversion.

All results are in slots; seconds only appear in throughput_from_service_time.
"""
import logging
import math
from typing import Tuple

import numpy as np
from scipy.stats import binom

from app.core.config import settings
from app.schemas.analytic import NcCode, ServiceTimeEstimate, TimingParams
from app.schemas.channel import BlerTable
from app.services.channel import harq_failure_curve

logger = logging.getLogger(__name__)

# Upper bound on N when searching for a target block-failure probability
REDUNDANCY_MAX_N = 100_000


class AnalyticError(Exception):
    """Base error for analytic calculators"""
    def __init__(self, message: str):
        self.message = message
        super().__init__(self.message)


class DivergenceError(AnalyticError):
    pass


class TruncationError(AnalyticError):
    """Series stopped with more than epsilon probability mass left"""
    def __init__(self, residual: float, epsilon: float, terms: int):
        self.residual = residual
        self.epsilon = epsilon
        self.terms = terms
        super().__init__(
            f"Series truncated after {terms} terms with residual {residual:.3e} > epsilon {epsilon:.1e}"
        )


def _check_probability(p: float, allow_one: bool = False) -> None:
    upper_ok = p <= 1.0 if allow_one else p < 1.0
    if not (0.0 <= p and upper_ok):
        bound = "[0, 1]" if allow_one else "[0, 1)"
        raise AnalyticError(f"Erasure probability must be in {bound}, got {p}")


def check_timing(timing: TimingParams) -> TimingParams:
    if not timing.tau_is_negligible(settings.TAU_WARN_RATIO):
        logger.warning(
            "tau=%s is not small against rtt=%s (ratio >= %s); air time is no longer negligible",
            timing.tau, timing.rtt, settings.TAU_WARN_RATIO,
        )
    return timing


# =============================================================================
# ARQ
# =============================================================================

def arq_expected_service_time(
    p: float,
    timing: TimingParams,
    epsilon: float = settings.SERIES_EPSILON,
) -> ServiceTimeEstimate:
    """
    Sum of k*RTT * p^(k-1) * (1-p) over k, stopped once the surviving mass
    p^k drops below epsilon. Converges to RTT / (1 - p).
    """
    if p == 1.0:
        raise DivergenceError("ARQ service time diverges at p = 1")
    _check_probability(p)
    if epsilon <= 0:
        raise AnalyticError(f"epsilon must be > 0, got {epsilon}")

    if p == 0.0:
        terms = 1
    else:
        terms = max(1, math.ceil(math.log(epsilon) / math.log(p)))
    if terms > settings.ARQ_MAX_TERMS:
        terms = settings.ARQ_MAX_TERMS
        logger.debug("ARQ p=%s: series needs more than %d terms, using RTT/(1-p)", p, terms)
        return ServiceTimeEstimate(
            expected_slots=timing.rtt / (1.0 - p), truncation_residual=p ** terms, terms_used=terms
        )

    k = np.arange(1, terms + 1, dtype=float)
    weights = np.power(p, k - 1) * (1.0 - p)
    expected = float(timing.rtt * np.sum(k * weights))
    residual = p ** terms

    logger.debug("ARQ p=%s: %d terms, residual %.3e", p, terms, residual)
    return ServiceTimeEstimate(
        expected_slots=expected, truncation_residual=residual, terms_used=terms
    )


# =============================================================================
# HARQ
# =============================================================================

def harq_attempt_distribution(
    table: BlerTable,
    mcs: int,
    snr_db: float,
    max_tx: int = settings.ANALYTIC_MAX_TX,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    (success, survival) for attempts 1..max_tx: success[k-1] is the
    probability that attempt k is the first to decode, survival[k-1] the
    probability that attempts 1..k all failed.
    """
    fail = harq_failure_curve(table, mcs, snr_db, max_tx)
    survival = np.cumprod(fail)
    survival_before = np.concatenate(([1.0], survival[:-1]))
    return survival_before * (1.0 - fail), survival


def harq_expected_service_time(
    table: BlerTable,
    mcs: int,
    snr_db: float,
    timing: TimingParams,
    max_tx: int = settings.ANALYTIC_MAX_TX,
    epsilon: float = settings.SERIES_EPSILON,
) -> ServiceTimeEstimate:
    if max_tx < 1:
        raise AnalyticError(f"max_tx must be >= 1, got {max_tx}")
    success, survival = harq_attempt_distribution(table, mcs, snr_db, max_tx)

    below = np.flatnonzero(survival < epsilon)
    if below.size == 0:
        raise TruncationError(float(survival[-1]), epsilon, max_tx)
    terms = int(below[0]) + 1

    k = np.arange(1, terms + 1, dtype=float)
    expected = float(timing.rtt * np.sum(k * success[:terms]))
    residual = float(survival[terms - 1])

    logger.debug("HARQ mcs=%d snr=%s dB: %d terms, residual %.3e", mcs, snr_db, terms, residual)
    return ServiceTimeEstimate(
        expected_slots=expected, truncation_residual=residual, terms_used=terms
    )


# =============================================================================
# NETWORK CODING
# =============================================================================

def nc_branch_weights(p: float, code: NcCode) -> Tuple[float, float, float]:
    """
    Probabilities of (no erasure, recoverable erasures, too many erasures)
    in one block of N coded packets.
    """
    _check_probability(p)
    pmf = binom.pmf(np.arange(code.n + 1), code.n, p)
    r = code.redundancy
    return float(pmf[0]), float(np.sum(pmf[1:r + 1])), float(np.sum(pmf[r + 1:]))


def nc_expected_service_time(p: float, code: NcCode, timing: TimingParams) -> ServiceTimeEstimate:
    """
    Three-branch expectation for one repair round:
      no erasure        (RTT + tau)
      i <= N-K erased   (RTT + i*tau + (K+1)/2*tau)
      i >  N-K erased   (2*RTT + (2N-K+1)/2*tau + (i-N+K)*tau)
    The (K+1)/2 factor is the mean position of a packet inside its block.
    """
    _check_probability(p)
    check_timing(timing)
    n, k = code.n, code.k
    rtt, tau = timing.rtt, timing.tau

    i = np.arange(n + 1)
    pmf = binom.pmf(i, n, p)

    cost = np.empty(n + 1, dtype=float)
    cost[0] = rtt + tau
    recoverable = slice(1, n - k + 1)
    cost[recoverable] = rtt + i[recoverable] * tau + (k + 1) / 2.0 * tau
    lost = slice(n - k + 1, n + 1)
    cost[lost] = 2.0 * rtt + (2 * n - k + 1) / 2.0 * tau + (i[lost] - n + k) * tau

    expected = float(np.dot(pmf, cost))
    logger.debug("NC p=%s k=%d n=%d: E[X]=%.6f slots", p, k, n, expected)
    return ServiceTimeEstimate(expected_slots=expected, truncation_residual=0.0, terms_used=n + 1)


def nc_block_failure_prob(p: float, code: NcCode) -> float:
    """P(more than N-K of the N coded packets are erased)"""
    _check_probability(p, allow_one=True)
    return float(binom.sf(code.n - code.k, code.n, p))


def redundancy_for_bler(k: int, p: float) -> NcCode:
    """Smallest N >= k whose redundancy fraction (N-K)/N covers p"""
    if k < 1:
        raise AnalyticError(f"k must be >= 1, got {k}")
    _check_probability(p)
    n = max(k, math.ceil(k / (1.0 - p)))
    # float noise in k/(1-p) can push the ceiling one step either way
    while n > k and (n - 1 - k) >= p * (n - 1) - 1e-12:
        n -= 1
    while (n - k) < p * n - 1e-12:
        n += 1
    return NcCode(k=k, n=n)


def redundancy_for_target(k: int, p: float, max_failure: float = 1e-3) -> NcCode:
    """Smallest N >= k with block failure probability <= max_failure"""
    if k < 1:
        raise AnalyticError(f"k must be >= 1, got {k}")
    _check_probability(p)
    if not 0.0 < max_failure < 1.0:
        raise AnalyticError(f"max_failure must be in (0, 1), got {max_failure}")
    for n in range(k, REDUNDANCY_MAX_N + 1):
        if binom.sf(n - k, n, p) <= max_failure:
            return NcCode(k=k, n=n)
    raise AnalyticError(
        f"No code with k={k} and n <= {REDUNDANCY_MAX_N} reaches failure {max_failure} at p={p}"
    )


# =============================================================================
# THROUGHPUT
# =============================================================================

def throughput_from_service_time(
    estimate: ServiceTimeEstimate,
    bits_per_tb: float,
    slot_seconds: float = settings.SLOT_SECONDS,
) -> float:
    """Reciprocal of the mean service time, in bits/s"""
    if slot_seconds <= 0:
        raise AnalyticError(f"slot_seconds must be > 0, got {slot_seconds}")
    return bits_per_tb / (estimate.expected_slots * slot_seconds)
