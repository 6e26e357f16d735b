"""
Wall-clock bookkeeping for one run.

Timings only reach the log. Artifacts never carry them, so reruns of the same
config stay byte-identical.
"""
import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)


@dataclass
class StageMetrics:
    """A timed stage: one tabulation, Monte Carlo estimate or fit.

    ``items_processed`` counts whatever the stage iterates over: grid rows,
    sample paths or objective evaluations.
    """
    stage_name: str
    start_time: float
    end_time: Optional[float] = None
    items_processed: int = 0
    errors: List[str] = field(default_factory=list)

    @property
    def duration(self) -> float:
        end = time.perf_counter() if self.end_time is None else self.end_time
        return end - self.start_time

    @property
    def throughput(self) -> float:
        elapsed = self.duration
        return self.items_processed / elapsed if elapsed > 0 else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'stage_name': self.stage_name,
            'duration_seconds': self.duration,
            'items_processed': self.items_processed,
            'throughput_items_per_sec': self.throughput,
            'error_count': len(self.errors),
        }


class MetricsTracker:
    """Sequential stage timer for a CLI command; at most one stage is open."""

    def __init__(self):
        self.stages: Dict[str, StageMetrics] = {}
        self.current_stage: Optional[str] = None
        self.start_time = time.perf_counter()

    def start_stage(self, stage_name: str) -> None:
        if self.current_stage:
            self.finish_stage()
        self.current_stage = stage_name
        self.stages[stage_name] = StageMetrics(stage_name=stage_name, start_time=time.perf_counter())
        logger.debug(f"Stage {stage_name} started")

    def finish_stage(self) -> Optional[StageMetrics]:
        """Close the open stage and log its timing; None when nothing is open."""
        if not self.current_stage:
            return None
        stage = self.stages[self.current_stage]
        stage.end_time = time.perf_counter()
        logger.info(
            f"Stage {stage.stage_name}: {stage.items_processed} items in {stage.duration:.2f}s",
            extra={'stage': stage.stage_name, 'duration_seconds': stage.duration, 'items': stage.items_processed},
        )
        self.current_stage = None
        return stage

    def _stage(self, stage_name: Optional[str]) -> Optional[StageMetrics]:
        name = stage_name or self.current_stage
        return self.stages.get(name) if name else None

    def record_items(self, count: int, stage_name: Optional[str] = None) -> None:
        stage = self._stage(stage_name)
        if stage is None:
            logger.warning(f"Items recorded for unknown stage {stage_name or self.current_stage!r}")
            return
        stage.items_processed += count

    def record_error(self, error: str, stage_name: Optional[str] = None) -> None:
        stage = self._stage(stage_name)
        if stage is not None:
            stage.errors.append(error)

    def slowest(self) -> Optional[StageMetrics]:
        """The closed stage with the longest duration."""
        closed = [s for s in self.stages.values() if s.end_time is not None]
        return max(closed, key=lambda s: s.duration, default=None)

    def get_summary(self) -> Dict[str, Any]:
        """Close any open stage and summarise the run."""
        if self.current_stage:
            self.finish_stage()
        slowest = self.slowest()
        return {
            'total_duration_seconds': time.perf_counter() - self.start_time,
            'total_items_processed': sum(s.items_processed for s in self.stages.values()),
            'slowest_stage': slowest.stage_name if slowest else None,
            'stages': {name: stage.to_dict() for name, stage in self.stages.items()},
        }
