"""
Exact barrier crossing for drifted Brownian segments.

The segment is ``x + μt + σW_t`` and the barrier sits ``gap`` below the start.
Passage times follow the inverse Gaussian law (Lévy law for μ = 0) and are
defective for μ > 0; endpoints conditioned on no crossing come from rejection
against the reflection-principle bridge probability.
"""
import logging
import math
from typing import Tuple

import numpy as np

from passage_kit.exceptions import DomainError, NonConvergenceError
from passage_kit.simulate.rng import RandomSource, as_generator

logger = logging.getLogger(__name__)

MAX_REJECTION_ROUNDS = 10_000


def _inverse_gaussian(mean: np.ndarray, shape: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    """IG(mean, shape) variates by the transform method (one normal, one uniform each)."""
    y = gen.standard_normal(mean.shape) ** 2
    a = mean * y / (2.0 * shape)
    # smaller root of the quadratic, written without cancellation
    root = mean / (1.0 + a + np.sqrt(a * (a + 2.0)))
    u = gen.random(mean.shape)
    return np.where(u <= mean / (mean + root), root, mean * mean / root)


def sample_passage_times(mu: float, sigma: float, gaps: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    """
    Passage times below ``gaps`` for a common drift and volatility.

    Returns ``inf`` where the path never reaches the barrier (only for μ > 0).
    """
    gaps = np.asarray(gaps, dtype=float)
    if sigma <= 0:
        raise DomainError("sample_passage_times needs sigma > 0; use the deterministic branch")
    if np.any(gaps <= 0):
        raise DomainError("barrier gaps must be > 0")
    sigma2 = sigma * sigma
    shape = gaps * gaps / sigma2
    if mu == 0:
        z = gen.standard_normal(gaps.shape)
        with np.errstate(divide="ignore"):
            return shape / (z * z)
    times = _inverse_gaussian(gaps / abs(mu), shape, gen)
    if mu > 0:
        reach = gen.random(gaps.shape) < np.exp(-2.0 * mu * gaps / sigma2)
        times = np.where(reach, times, np.inf)
    return times


def sample_no_crossing_endpoint(
    mu: float, sigma: float, gaps: np.ndarray, horizons: np.ndarray, gen: np.random.Generator
) -> np.ndarray:
    """
    Displacement at the horizon given that the barrier was not reached.

    Proposals ``Y ~ N(μh, σ²h)`` are accepted when ``Y > -gap`` and a uniform
    exceeds the bridge crossing probability ``exp(-2 gap (Y + gap) / (σ² h))``.
    Rejected entries are redrawn until all are accepted.
    """
    gaps = np.asarray(gaps, dtype=float)
    horizons = np.asarray(horizons, dtype=float)
    out = np.empty_like(gaps)
    pending = np.arange(gaps.size)
    sigma2 = sigma * sigma
    for _ in range(MAX_REJECTION_ROUNDS):
        if pending.size == 0:
            return out
        g, h = gaps[pending], horizons[pending]
        y = mu * h + sigma * np.sqrt(h) * gen.standard_normal(pending.size)
        u = gen.random(pending.size)
        with np.errstate(over="ignore"):
            cross_prob = np.exp(-2.0 * g * np.maximum(y + g, 0.0) / (sigma2 * h))
        accepted = (y > -g) & (u > cross_prob)
        out[pending[accepted]] = y[accepted]
        pending = pending[~accepted]
    raise NonConvergenceError(
        f"no-crossing endpoint rejection left {pending.size} entries after {MAX_REJECTION_ROUNDS} rounds"
    )


def inverse_gaussian_passage(
    mu: float, sigma: float, gap: float, horizon: float, rng: RandomSource
) -> Tuple[bool, float]:
    """
    Sample ``T = inf{t : x + μt + σW_t <= x - gap}``.

    Args:
        mu: Drift μ
        sigma: Volatility σ > 0
        gap: Distance to the barrier, > 0
        horizon: Segment length; the flag reports ``T <= horizon``
        rng: Stream address or generator

    Returns:
        Tuple (crossed_before_horizon, T); T is ``inf`` when the barrier is never hit

    Raises:
        DomainError: If ``sigma <= 0`` or ``gap <= 0``
    """
    if not gap > 0:
        raise DomainError(f"gap must be > 0, got {gap}")
    if not horizon > 0:
        raise DomainError(f"horizon must be > 0, got {horizon}")
    gen = as_generator(rng)
    time = float(sample_passage_times(mu, sigma, np.array([gap]), gen)[0])
    return time <= horizon, time


def deterministic_passage_time(mu: float, gap: float) -> float:
    """Pure-drift branch: ``gap/|μ|`` when moving down, never otherwise."""
    return gap / -mu if mu < 0 else math.inf
