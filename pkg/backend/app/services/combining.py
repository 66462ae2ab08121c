"""
Combining Service
Linear MMSE combining of K noisy copies Y_i = X + N_i of one symbol.

The closed forms are checked against a dense normal-equation solve and a
Monte Carlo estimate. Combining K copies gives the same normalized error
variance as a single copy sent at K times the power, which is what lets
the channel model treat HARQ as effective-SNR scaling.
"""
import logging
from typing import Tuple

import numpy as np

from app.schemas.combining import SignalMoments

logger = logging.getLogger(__name__)

ORACLE_MAX_K = 32


class CombiningError(Exception):
    def __init__(self, message: str):
        self.message = message
        super().__init__(self.message)


def _check_k(k: int) -> None:
    if k < 1:
        raise CombiningError(f"Number of transmissions must be >= 1, got {k}")


def optimal_weight(k: int, m: SignalMoments) -> float:
    """alpha = E[X^2] / (k E[X^2] + E[N^2]), shared by every copy"""
    _check_k(k)
    return m.ex2 / (k * m.ex2 + m.en2)


def error_variance(k: int, m: SignalMoments) -> float:
    """sigma_k^2 = E[X^2] E[N^2] / (k E[X^2] + E[N^2])"""
    _check_k(k)
    return m.ex2 * m.en2 / (k * m.ex2 + m.en2)


def lsq_oracle(k: int, m: SignalMoments) -> Tuple[np.ndarray, float]:
    """
    Solve R a = r with R_ij = E[Y_i Y_j] = E[X^2] + E[N^2] delta_ij and
    r_i = E[X Y_i] = E[X^2]. Returns the weights and the minimum MSE.
    """
    if not 1 <= k <= ORACLE_MAX_K:
        raise CombiningError(f"Oracle supports 1 <= k <= {ORACLE_MAX_K}, got {k}")
    corr = np.full((k, k), m.ex2) + m.en2 * np.eye(k)
    cross = np.full(k, m.ex2)
    try:
        weights = np.linalg.solve(corr, cross)
    except np.linalg.LinAlgError as e:
        raise CombiningError(f"Normal equations are singular for k={k}: {e}") from e
    variance = float(m.ex2 - cross @ weights)
    return weights, variance


def effective_snr_equivalence(k: int, m: SignalMoments) -> Tuple[float, float]:
    """
    Normalized error variance of (k combined copies, one copy at k-fold
    power). Both equal E[N^2] / (k E[X^2] + E[N^2]).
    """
    _check_k(k)
    combined = error_variance(k, m) / m.ex2
    boosted = SignalMoments(ex2=k * m.ex2, en2=m.en2)
    scaled = error_variance(1, boosted) / boosted.ex2
    return combined, scaled


def empirical_error_variance(
    k: int,
    m: SignalMoments,
    rng: np.random.Generator,
    samples: int = 100_000,
) -> float:
    """Monte Carlo MSE of the optimal combiner with Gaussian signal and noise"""
    _check_k(k)
    x = rng.normal(0.0, np.sqrt(m.ex2), size=samples)
    noise = rng.normal(0.0, np.sqrt(m.en2), size=(samples, k))
    estimate = optimal_weight(k, m) * (x[:, None] + noise).sum(axis=1)
    mse = float(np.mean((x - estimate) ** 2))
    logger.debug("Empirical combiner MSE k=%d over %d samples: %.6f", k, samples, mse)
    return mse
