"""
First-passage samplers for the four process families.

Single-sample functions take a stream or generator and return one
``FirstPassageSample``. ``sample_first_passages`` draws large batches in
fixed-size chunks, one ``RngStream`` per chunk, and merges the chunks in stream
order so the result does not depend on the thread count.
"""
import logging
import math
from dataclasses import dataclass
from functools import partial
from typing import Iterator, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from passage_kit.exceptions import DomainError, ValidationError
from passage_kit.scale.types import Csbp, KilledDrift, Levy, ProcessSpec, Pssmp
from passage_kit.simulate.engine import (
    DEFAULT_MAX_EVENTS,
    EXCURSION_SCALE,
    BranchingClock,
    LampertiExpClock,
    PassageOutcome,
    run_passages,
)
from passage_kit.simulate.rng import RandomSource, RngStream, as_generator
from passage_kit.utils.parallel import parallel_map

logger = logging.getLogger(__name__)

DEFAULT_DELTA = 1e-3
DEFAULT_CHUNK_SIZE = 10_000


@dataclass(frozen=True)
class FirstPassageSample:
    """
    One simulated outcome.

    ``time`` and ``level_at_crossing`` are NaN when the path was killed (or
    escaped) before crossing.
    """
    crossed: bool
    time: float
    level_at_crossing: float = math.nan


@dataclass
class SampleBatch:
    """Merged outcomes of a batch, in (stream_id, index) order."""
    crossed: np.ndarray
    time: np.ndarray
    level: np.ndarray
    stream_id: np.ndarray
    index: np.ndarray
    capped: int = 0

    def __len__(self) -> int:
        return int(self.crossed.size)

    def __iter__(self) -> Iterator[FirstPassageSample]:
        for c, t, lv in zip(self.crossed, self.time, self.level):
            yield FirstPassageSample(bool(c), float(t), float(lv))

    def discounted(self, q: float) -> np.ndarray:
        """``e^{-q T} 1{crossed}`` per sample; killed samples give 0."""
        out = np.zeros(self.crossed.size)
        out[self.crossed] = np.exp(-q * self.time[self.crossed])
        return out

    @classmethod
    def concatenate(cls, parts: List["SampleBatch"]) -> "SampleBatch":
        return cls(
            crossed=np.concatenate([b.crossed for b in parts]),
            time=np.concatenate([b.time for b in parts]),
            level=np.concatenate([b.level for b in parts]),
            stream_id=np.concatenate([b.stream_id for b in parts]),
            index=np.concatenate([b.index for b in parts]),
            capped=sum(b.capped for b in parts),
        )


def _check_delta(delta: float) -> float:
    delta = float(delta)
    if not (math.isfinite(delta) and delta > 0):
        raise ValidationError(f"clock step delta must be > 0, got {delta}")
    return delta


def _check_pair(spec: ProcessSpec, x: float, l: float) -> None:
    if l > x:
        raise DomainError(f"level l={l} lies above the start x={x}")
    spec.check_state(x)
    spec.check_state(l)
    if isinstance(spec, Csbp) and not l > 0:
        raise DomainError(f"CSBP passages are simulated for levels l > 0 only, got {l}")


def _killed_drift_outcome(spec: KilledDrift, x: float, l: float, n: int, gen: np.random.Generator) -> PassageOutcome:
    travel = spec.travel_time(l, x)
    hazard = spec.killing_integral(l, x)
    survive = gen.exponential(1.0, n) > hazard if hazard > 0 else np.ones(n, dtype=bool)
    time = np.where(survive, travel, np.nan)
    level = np.where(survive, l, np.nan)
    return PassageOutcome(crossed=survive, time=time, level=level, events=np.ones(n, dtype=np.int64))


def simulate_outcomes(
    spec: ProcessSpec,
    x: float,
    l: float,
    n: int,
    gen: np.random.Generator,
    delta: float = DEFAULT_DELTA,
    max_events: int = DEFAULT_MAX_EVENTS,
    observe=None,
) -> PassageOutcome:
    """Run ``n`` paths of any family with one generator."""
    _check_pair(spec, x, l)
    if isinstance(spec, Levy):
        return run_passages(spec.triplet, x, l, n, gen, max_events=max_events, observe=observe)
    if observe is not None:
        raise ValidationError("path observation is only supported for the levy family")
    if isinstance(spec, Pssmp):
        clock = LampertiExpClock(spec.alpha, _check_delta(delta))
        return run_passages(
            spec.triplet, x, l, n, gen, clock=clock, max_events=max_events,
            excursion_cap=EXCURSION_SCALE / spec.alpha,
        )
    if isinstance(spec, Csbp):
        clock = BranchingClock(_check_delta(delta))
        return run_passages(spec.triplet, x, l, n, gen, clock=clock, max_events=max_events)
    if isinstance(spec, KilledDrift):
        return _killed_drift_outcome(spec, x, l, n, gen)
    raise ValidationError(f"unsupported process spec {type(spec).__name__}")


def _single(spec: ProcessSpec, x: float, l: float, rng: RandomSource, **kwargs) -> FirstPassageSample:
    out = simulate_outcomes(spec, x, l, 1, as_generator(rng), **kwargs)
    return FirstPassageSample(bool(out.crossed[0]), float(out.time[0]), float(out.level[0]))


def sample_levy_first_passage(spec: Levy, x: float, l: float, rng: RandomSource) -> FirstPassageSample:
    """
    Exact passage of a killed Lévy process.

    Exponential inter-jump times at the total jump rate, an independent
    exponential killing clock and exact Brownian crossings between jumps; no
    discretisation bias.
    """
    return _single(spec, x, l, rng)


def sample_pssmp_first_passage(
    spec: Pssmp, x: float, l: float, rng: RandomSource, delta: float = DEFAULT_DELTA
) -> FirstPassageSample:
    """
    Passage of the log-pssMp: ``T = ∫_0^S e^{-α ξ_u} du`` with S the passage of
    the driving path ξ below ``l`` (killed at ``e_p`` on the ξ clock).
    """
    return _single(spec, x, l, rng, delta=delta)


def sample_csbp_first_passage(
    spec: Csbp, x: float, l: float, rng: RandomSource, delta: float = DEFAULT_DELTA
) -> FirstPassageSample:
    """CSBP passage ``T = ∫_0^S du / Y_u`` through its driving Lévy path Y."""
    return _single(spec, x, l, rng, delta=delta)


def sample_killed_drift_passage(spec: KilledDrift, x: float, l: float, rng: RandomSource) -> FirstPassageSample:
    """Deterministic travel time ``V(x) - V(l)``, survived with probability ``e^{-∫ω/v}``."""
    return _single(spec, x, l, rng)


def chunk_layout(n: int, chunk_size: int) -> List[Tuple[int, int, int]]:
    """``(stream_id, first_index, size)`` for each chunk."""
    if n < 1:
        raise ValidationError(f"sample count must be >= 1, got {n}")
    if chunk_size < 1:
        raise ValidationError(f"chunk size must be >= 1, got {chunk_size}")
    return [(k, start, min(chunk_size, n - start)) for k, start in enumerate(range(0, n, chunk_size))]


def _run_chunk(
    chunk: Tuple[int, int, int],
    spec: ProcessSpec,
    x: float,
    l: float,
    seed: int,
    delta: float,
    max_events: int,
    progress: Optional[tqdm],
) -> SampleBatch:
    stream_id, first, size = chunk
    gen = RngStream(seed, stream_id).generator()
    out = simulate_outcomes(spec, x, l, size, gen, delta=delta, max_events=max_events)
    if progress is not None:
        progress.update(size)
    return SampleBatch(
        crossed=out.crossed,
        time=out.time,
        level=out.level,
        stream_id=np.full(size, stream_id, dtype=np.int64),
        index=np.arange(first, first + size, dtype=np.int64),
        capped=out.capped,
    )


def sample_first_passages(
    spec: ProcessSpec,
    x: float,
    l: float,
    n: int,
    seed: int,
    delta: float = DEFAULT_DELTA,
    threads: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    max_events: int = DEFAULT_MAX_EVENTS,
    show_progress: bool = False,
) -> SampleBatch:
    """
    Draw ``n`` first-passage samples, deterministic in ``(spec, x, l, n, seed, delta, chunk_size)``.

    Args:
        spec: Process family
        x: Start
        l: Level, ``l <= x``
        n: Sample count
        seed: 64-bit seed; chunk ``k`` uses stream ``(seed, k)``
        delta: Clock sub-step for the time-changed families
        threads: Worker threads; never changes the result
        chunk_size: Samples per stream
        max_events: Per-path segment budget
        show_progress: Show a tqdm bar on stderr

    Returns:
        SampleBatch in stream order
    """
    _check_pair(spec, x, l)
    chunks = chunk_layout(n, chunk_size)
    logger.info(
        f"Sampling {n} {spec.family} passages x={x} l={l} in {len(chunks)} chunks "
        f"(seed={seed}, delta={delta}, threads={threads})"
    )
    with tqdm(total=n, desc=f"Sampling {spec.family}", disable=not show_progress, leave=False) as bar:
        worker = partial(
            _run_chunk, spec=spec, x=x, l=l, seed=seed, delta=delta,
            max_events=max_events, progress=bar if show_progress else None,
        )
        parts = parallel_map(worker, chunks, max_workers=threads)
    batch = SampleBatch.concatenate(parts)
    if batch.capped:
        logger.warning(f"{batch.capped} samples hit the event cap and count as not crossed")
    return batch
