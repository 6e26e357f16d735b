"""
First-passage transform data: the input of every identification routine.
"""
import csv
import logging
import math
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from passage_kit.exceptions import IdentificationError, ValidationError
from passage_kit.scale import ProcessSpec, tabulate_transforms

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("x", "l", "q", "value")


@dataclass(frozen=True)
class TransformEntry:
    x: float
    l: float
    q: float
    value: float

    @property
    def gap(self) -> float:
        return self.x - self.l


@dataclass(frozen=True)
class TransformGrid:
    """
    Transform values ``E_x[e^{-qT_l}; T_l < ζ]`` on a set of ``(x, l, q)`` points.

    ``q_min`` marks the threshold above which the values are trusted; rows with
    ``q <= q_min`` are ignored by the fits. ``None`` trusts every row.
    """
    entries: Tuple[TransformEntry, ...]
    q_min: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        for e in self.entries:
            if not all(math.isfinite(v) for v in (e.x, e.l, e.q, e.value)):
                raise ValidationError(f"non-finite transform entry {e}")
            if e.l > e.x:
                raise ValidationError(f"entry has l={e.l} above x={e.x}")
            if e.q < 0:
                raise ValidationError(f"entry has negative q={e.q}")
            if not 0 < e.value <= 1:
                raise ValidationError(f"transform value {e.value} at (x={e.x}, l={e.l}, q={e.q}) is outside (0, 1]")

    def __len__(self) -> int:
        return len(self.entries)

    def trusted(self) -> List[TransformEntry]:
        if self.q_min is None:
            return list(self.entries)
        return [e for e in self.entries if e.q > self.q_min]

    def by_q(self) -> "OrderedDict[float, List[TransformEntry]]":
        """Trusted entries grouped by q in increasing order."""
        groups: Dict[float, List[TransformEntry]] = {}
        for e in self.trusted():
            groups.setdefault(e.q, []).append(e)
        return OrderedDict(sorted(groups.items()))

    def qs(self) -> List[float]:
        return list(self.by_q())

    def gaps(self) -> List[float]:
        return sorted({e.gap for e in self.trusted() if e.gap > 0})

    def write_csv(self, path: Union[str, Path], header: Optional[str] = None) -> Path:
        """Write ``x,l,q,value`` rows with full float precision, preceded by an optional comment line."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            if header:
                f.write(header.rstrip("\n") + "\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for e in self.entries:
                writer.writerow([repr(e.x), repr(e.l), repr(e.q), repr(e.value)])
        logger.info(f"Wrote {len(self.entries)} transform rows to {path}")
        return path

    @classmethod
    def read_csv(cls, path: Union[str, Path], q_min: Optional[float] = None) -> "TransformGrid":
        """
        Read a grid written by :meth:`write_csv`; lines starting with ``#`` are skipped.

        Raises:
            ValidationError: On missing columns or invalid values
        """
        path = Path(path)
        with open(path, newline="") as f:
            lines = [line for line in f if line.strip() and not line.startswith("#")]
        reader = csv.DictReader(lines)
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValidationError(f"{path}: missing columns {sorted(missing)}")
        try:
            entries = [TransformEntry(*(float(row[c]) for c in CSV_COLUMNS)) for row in reader]
        except ValueError as e:
            raise ValidationError(f"{path}: {e}") from e
        logger.info(f"Read {len(entries)} transform rows from {path}")
        return cls(tuple(entries), q_min=q_min)


def generate_transform_grid(
    spec: ProcessSpec,
    qs: Iterable[float],
    xs: Sequence[float],
    ls: Sequence[float],
    q_min: Optional[float] = None,
) -> TransformGrid:
    """
    Noiseless grid from the closed-form transforms of ``spec``.

    Pairs with ``l > x`` are skipped, as are values that underflow to 0.
    """
    rows = tabulate_transforms(spec, qs, xs, ls)
    entries = [TransformEntry(r.x, r.l, r.q, r.transform) for r in rows if r.transform > 0]
    if len(entries) < len(rows):
        logger.warning(f"Dropped {len(rows) - len(entries)} transform values that underflow to 0")
    if not entries:
        raise IdentificationError("generated grid is empty")
    return TransformGrid(tuple(entries), q_min=q_min)


def gap_arrays(entries: Sequence[TransformEntry]) -> Tuple[np.ndarray, np.ndarray]:
    """Positive gaps and ``-log(value)`` of the informative entries."""
    informative = [e for e in entries if e.gap > 0]
    gaps = np.array([e.gap for e in informative], dtype=float)
    targets = np.array([-math.log(e.value) for e in informative], dtype=float)
    return gaps, targets
