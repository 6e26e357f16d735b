"""
Vectorised event-driven passage engine.

All paths of a chunk advance in lockstep. Each round moves every active path over
one segment whose length is the smallest of: time to the next jump, time to the
killing epoch and (for the time-changed families) a clock sub-step. Within a
segment the driving Lévy path is drifted Brownian motion, so the barrier crossing
is exact; only the Lamperti clocks are integrated on the sub-step grid, using the
exact integral along the straight line between segment endpoints.

The random draws of a round depend only on the set of active paths, which makes
a chunk a deterministic function of its generator.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from passage_kit.exceptions import DomainError
from passage_kit.exponent import LevyTriplet, effective_drift, psi_inverse
from passage_kit.simulate.brownian import (
    deterministic_passage_time,
    sample_no_crossing_endpoint,
    sample_passage_times,
)

logger = logging.getLogger(__name__)

# paths whose chance of ever coming back is below this are declared escaped
ESCAPE_PROBABILITY = 1e-12
# pssMp excursions higher than this many 1/alpha above the level are cut short
EXCURSION_SCALE = 20.0
MAX_STEP_FACTOR = 1000.0
DEFAULT_MAX_EVENTS = 10_000_000


@dataclass
class PassageOutcome:
    """Per-path results of one engine run."""
    crossed: np.ndarray
    time: np.ndarray
    level: np.ndarray
    events: np.ndarray
    capped: int = 0
    killed_at: Optional[np.ndarray] = None
    observed: Optional[np.ndarray] = None


def _phi_exp(y: np.ndarray) -> np.ndarray:
    """``(e^y - 1)/y`` with the removable singularity filled in."""
    small = np.abs(y) < 1e-10
    safe = np.where(small, 1.0, y)
    return np.where(small, 1.0 + 0.5 * y, np.expm1(safe) / safe)


def _phi_log(r: np.ndarray) -> np.ndarray:
    """``log(1 + r)/r`` with the removable singularity filled in."""
    small = np.abs(r) < 1e-10
    safe = np.where(small, 1.0, r)
    return np.where(small, 1.0 - 0.5 * r, np.log1p(safe) / safe)


class ClockModel:
    """Maps driving time to process time; the Lévy clock is the identity."""
    name = "levy"

    def substep(self, pos: np.ndarray, level: float) -> np.ndarray:
        return np.full(pos.shape, np.inf)

    def increment(self, start: np.ndarray, end: np.ndarray, duration: np.ndarray) -> np.ndarray:
        return duration


class LampertiExpClock(ClockModel):
    """``dt = e^{-α ξ} du``: the clock of the logarithm of a pssMp."""
    name = "pssmp"

    def __init__(self, alpha: float, delta: float):
        self.alpha = alpha
        self.delta = delta

    def substep(self, pos: np.ndarray, level: float) -> np.ndarray:
        # steps grow where the clock weight e^{-α ξ} is small
        with np.errstate(over="ignore"):
            h = self.delta * np.exp(0.5 * self.alpha * (pos - level))
        return np.minimum(h, MAX_STEP_FACTOR * self.delta)

    def increment(self, start, end, duration):
        return duration * np.exp(-self.alpha * start) * _phi_exp(-self.alpha * (end - start))


class BranchingClock(ClockModel):
    """``dt = du / Y``: the clock of a CSBP built from its driving Lévy path."""
    name = "csbp"

    def __init__(self, delta: float):
        self.delta = delta

    def substep(self, pos: np.ndarray, level: float) -> np.ndarray:
        return np.minimum(self.delta * pos ** 1.5, MAX_STEP_FACTOR * self.delta)

    def increment(self, start, end, duration):
        return duration / start * _phi_log((end - start) / start)


def run_passages(
    triplet: LevyTriplet,
    x: float,
    level: float,
    n: int,
    gen: np.random.Generator,
    clock: Optional[ClockModel] = None,
    max_events: int = DEFAULT_MAX_EVENTS,
    excursion_cap: Optional[float] = None,
    observe: Optional[Sequence[float]] = None,
) -> PassageOutcome:
    """
    Run ``n`` independent paths of the driving process from ``x`` down to ``level``.

    Args:
        triplet: Driving Lévy triplet; ``p`` kills on driving time
        x: Start of the driving path
        level: Barrier, ``level <= x``
        n: Number of paths
        gen: Generator consumed by this run only
        clock: Time change; identity when omitted
        max_events: Per-path segment budget; paths exceeding it count as not crossed
        excursion_cap: Height above ``level`` beyond which a returning path is
            reset to ``level + excursion_cap`` (clock mass above is dropped)
        observe: Increasing driving times at which to record positions of paths
            still alive and above the level; they become segment cut points

    Returns:
        PassageOutcome with process times of crossing (NaN where not crossed)
    """
    if level > x:
        raise DomainError(f"level {level} lies above the start {x}")
    clock = clock or ClockModel()
    grid = np.asarray(observe if observe is not None else [], dtype=float)
    if grid.size and (np.any(np.diff(grid) <= 0) or grid[0] < 0):
        raise DomainError("observation times must be nonnegative and strictly increasing")
    crossed = np.zeros(n, dtype=bool)
    times = np.full(n, np.nan)
    levels = np.full(n, np.nan)
    killed_at = np.full(n, np.nan)
    events = np.zeros(n, dtype=np.int64)
    observed = np.full((n, grid.size), np.nan) if grid.size else None
    next_obs = np.zeros(n, dtype=np.int64)
    if x == level:
        crossed[:] = True
        times[:] = 0.0
        levels[:] = level
        return PassageOutcome(crossed, times, levels, events, killed_at=killed_at, observed=observed)

    drift = effective_drift(triplet)
    sigma = triplet.sigma
    jump_rate = triplet.jumps.total_rate
    kill_rate = triplet.p
    z_kill = psi_inverse(triplet, kill_rate).z
    escape_gap = -math.log(ESCAPE_PROBABILITY) / z_kill if z_kill > 0 else math.inf

    def draw_jump_times(k: int) -> np.ndarray:
        return gen.exponential(1.0 / jump_rate, k) if jump_rate > 0 else np.full(k, np.inf)

    def draw_kill_times(k: int) -> np.ndarray:
        return gen.exponential(1.0 / kill_rate, k) if kill_rate > 0 else np.full(k, np.inf)

    pos = np.full(n, float(x))
    elapsed = np.zeros(n)
    to_jump = draw_jump_times(n)
    to_kill = draw_kill_times(n)
    if grid.size and grid[0] == 0:
        observed[:, 0] = x
        next_obs[:] = 1
    active = np.arange(n)
    capped = 0
    rounds = 0

    while active.size:
        rounds += 1
        gap = pos[active] - level

        escaped = gap > escape_gap
        if excursion_cap is not None:
            high = ~escaped & (gap > excursion_cap)
            if np.any(high):
                idx = active[high]
                back = gen.random(idx.size) < np.exp(-z_kill * (gap[high] - excursion_cap))
                pos[idx[back]] = level + excursion_cap
                to_jump[idx[back]] = draw_jump_times(int(back.sum()))
                to_kill[idx[back]] = draw_kill_times(int(back.sum()))
                escaped[np.nonzero(high)[0][~back]] = True
                gap = pos[active] - level
        if np.any(escaped):
            active = active[~escaped]
            gap = gap[~escaped]
            if not active.size:
                break

        touching = gap <= 0.0
        if np.any(touching):
            # rounding put the endpoint on the barrier
            idx = active[touching]
            crossed[idx] = True
            times[idx] = elapsed[idx]
            levels[idx] = level
            active, gap = active[~touching], gap[~touching]
            if not active.size:
                break

        start = pos[active]
        horizon = np.minimum(np.minimum(to_jump[active], to_kill[active]), clock.substep(start, level))
        to_obs = np.full(active.size, np.inf)
        if grid.size:
            pending = next_obs[active] < grid.size
            to_obs[pending] = grid[next_obs[active][pending]] - elapsed[active][pending]
            horizon = np.minimum(horizon, to_obs)
        if sigma > 0:
            passage = sample_passage_times(drift, sigma, gap, gen)
        else:
            passage = np.full(active.size, deterministic_passage_time(drift, 1.0)) * gap
        hit = passage <= horizon

        # crossings inside the segment
        if np.any(hit):
            idx = active[hit]
            elapsed[idx] += clock.increment(start[hit], np.full(idx.size, level), passage[hit])
            crossed[idx] = True
            times[idx] = elapsed[idx]
            levels[idx] = level

        miss = ~hit
        lost = miss & ~np.isfinite(horizon)
        move = miss & np.isfinite(horizon)
        idx = active[move]
        h = horizon[move]
        if idx.size:
            if sigma > 0:
                displacement = sample_no_crossing_endpoint(drift, sigma, gap[move], h, gen)
            else:
                displacement = drift * h
            end = start[move] + displacement
            elapsed[idx] += clock.increment(start[move], end, h)
            pos[idx] = end
            to_kill[idx] -= h
            to_jump[idx] -= h
            killed = to_kill[idx] <= 0.0
            killed_at[idx[killed]] = elapsed[idx[killed]]
            if grid.size:
                seen = ~killed & (h == to_obs[move])
                oidx = idx[seen]
                observed[oidx, next_obs[oidx]] = pos[oidx]
                next_obs[oidx] += 1
            jumped = ~killed & (to_jump[idx] <= 0.0)
            jidx = idx[jumped]
            if jidx.size:
                pos[jidx] += triplet.jumps.sample_sizes(gen, jidx.size)
                to_jump[jidx] = draw_jump_times(jidx.size)
            events[idx] += 1
            over = idx[~killed & (events[idx] >= max_events)]
            capped += over.size
            survivors = idx[~killed & (events[idx] < max_events)]
        else:
            survivors = idx
        if np.any(lost):
            logger.debug(f"{int(lost.sum())} paths drift away with no jump or killing left")
        active = survivors

    logger.debug(
        f"Engine ({clock.name}): {n} paths, {rounds} rounds, {int(crossed.sum())} crossed, {capped} capped"
    )
    if capped:
        logger.warning(f"{capped} of {n} paths hit the {max_events}-event cap and count as not crossed")
    return PassageOutcome(crossed, times, levels, events, capped, killed_at=killed_at, observed=observed)
