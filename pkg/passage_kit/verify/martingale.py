"""
Martingale check of the scale-function characterisation for Lévy families.

With ``Φ(y) = e^{-φ y}`` and ``φ = ψ^{-1}(p + q)`` the stopped process
``Φ(X_{t∧T}) e^{-q(t∧T)} 1{t∧T < ζ}`` is a martingale; its mean over a time grid
must stay at ``Φ(x)``. Values are normalised by ``Φ(l)`` so the target is the
transform itself.
"""
import logging
import math
from dataclasses import dataclass
from functools import partial
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from passage_kit.exceptions import DomainError, ValidationError
from passage_kit.exponent import psi_inverse
from passage_kit.scale import Levy
from passage_kit.simulate import DEFAULT_CHUNK_SIZE, RngStream, chunk_layout, run_passages
from passage_kit.utils.parallel import parallel_map
from passage_kit.verify.monte_carlo import DEFAULT_BAND, json_float, z_statistic

logger = logging.getLogger(__name__)


@dataclass
class MartingaleReport:
    """Per-time means of the stopped martingale and the constancy statistic."""
    times: List[float]
    means: List[float]
    std_errors: List[float]
    target: float
    statistic: float
    exponent: float
    q: float
    x: float
    l: float
    n: int
    seed: int
    kind: str = "martingale"

    def passed(self, band: float = DEFAULT_BAND) -> bool:
        return self.statistic <= band

    def to_dict(self, band: float = DEFAULT_BAND) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "q": self.q,
            "x": self.x,
            "l": self.l,
            "exponent": self.exponent,
            "times": self.times,
            "means": self.means,
            "std_errors": self.std_errors,
            "target": self.target,
            "statistic": json_float(self.statistic),
            "n": self.n,
            "seed": self.seed,
            "passed": self.passed(band),
        }


def martingale_values(
    crossed: np.ndarray,
    time: np.ndarray,
    killed_at: np.ndarray,
    observed: np.ndarray,
    grid: np.ndarray,
    q: float,
    exponent: float,
    l: float,
) -> np.ndarray:
    """
    ``n × m`` values of ``e^{-φ(X_{t∧T} - l)} e^{-q(t∧T)}`` at the grid times.

    Paths crossed by ``t`` contribute ``e^{-qT}``, killed or escaped paths 0.
    """
    t = grid[None, :]
    hit = crossed[:, None] & (time[:, None] <= t)
    alive = np.isfinite(observed)
    with np.errstate(invalid="ignore", over="ignore"):
        stopped = np.exp(-q * np.where(hit, time[:, None], 0.0))
        running = np.exp(-exponent * (np.where(alive, observed, l) - l) - q * t)
    values = np.where(hit, stopped, np.where(alive, running, 0.0))
    killed = np.isfinite(killed_at)[:, None] & (np.nan_to_num(killed_at, nan=np.inf)[:, None] <= t)
    values[killed & ~hit] = 0.0
    return np.nan_to_num(values, nan=0.0)


def _chunk_sums(
    chunk: Tuple[int, int, int],
    spec: Levy,
    x: float,
    l: float,
    q: float,
    exponent: float,
    grid: np.ndarray,
    seed: int,
) -> Tuple[np.ndarray, np.ndarray]:
    stream_id, _, size = chunk
    gen = RngStream(seed, stream_id).generator()
    out = run_passages(spec.triplet, x, l, size, gen, observe=grid)
    if out.observed is None:
        raise ValidationError("martingale check needs a nonempty time grid")
    values = martingale_values(out.crossed, out.time, out.killed_at, out.observed, grid, q, exponent, l)
    return values.sum(axis=0), (values ** 2).sum(axis=0)


def martingale_residuals(
    spec: Levy,
    q: float,
    x: float,
    l: float,
    grid: Sequence[float],
    n: int,
    seed: int,
    exponent_override: Optional[float] = None,
    threads: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> MartingaleReport:
    """
    Estimate the stopped martingale on ``grid`` and test that its mean is constant.

    Args:
        spec: Lévy family
        q: Laplace variable, ``q > 0``
        x: Start
        l: Level
        grid: Strictly increasing nonnegative times
        n: Paths
        seed: Seed of the path streams
        exponent_override: Use this exponent instead of ``ψ^{-1}(p+q)`` (negative control)
        threads: Worker threads; never changes the result
        chunk_size: Paths per stream

    Returns:
        MartingaleReport with statistic ``max_j |mean_j - Φ(x)| / SE_j``

    Example:
        >>> spec = Levy(LevyTriplet(gamma=0.0, sigma2=1.0))
        >>> martingale_residuals(spec, 1.0, 1.0, 0.0, [0.25, 0.5, 1.0], 10_000, 7).passed()
        True
    """
    if not isinstance(spec, Levy):
        raise ValidationError("the martingale check is only available for the levy family")
    if q <= 0:
        raise DomainError(f"martingale check needs q > 0, got {q}")
    if l > x:
        raise DomainError(f"level {l} lies above the start {x}")
    if n < 2:
        raise ValidationError(f"martingale check needs n >= 2, got {n}")
    times = np.asarray(grid, dtype=float)
    if times.size == 0 or np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ValidationError("martingale grid must be nonempty, nonnegative and strictly increasing")

    exponent = psi_inverse(spec.triplet, spec.triplet.p + q).z if exponent_override is None else exponent_override
    target = math.exp(-exponent * (x - l))
    worker = partial(_chunk_sums, spec=spec, x=x, l=l, q=q, exponent=exponent, grid=times, seed=seed)
    parts = parallel_map(worker, chunk_layout(n, chunk_size), max_workers=threads)
    total = np.sum([p[0] for p in parts], axis=0)
    total_sq = np.sum([p[1] for p in parts], axis=0)
    means = total / n
    variance = np.maximum(total_sq - n * means ** 2, 0.0) / (n - 1)
    std_errors = np.sqrt(variance / n)
    zs = [abs(z_statistic(m - target, s, target)) for m, s in zip(means, std_errors)]
    statistic = float(max(zs))
    logger.info(
        f"Martingale check q={q} x={x} l={l} exponent={exponent:.6g}: statistic {statistic:.2f} "
        f"over {times.size} times"
    )
    return MartingaleReport(
        times=times.tolist(),
        means=means.tolist(),
        std_errors=std_errors.tolist(),
        target=target,
        statistic=statistic,
        exponent=exponent,
        q=q,
        x=x,
        l=l,
        n=n,
        seed=seed,
    )
