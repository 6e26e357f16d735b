"""Sample dump files: ``stream_id,index,crossed,time`` with an optional gzip layer."""
import csv
import gzip
import io
import logging
from pathlib import Path
from typing import Optional

import numpy as np

from passage_kit.simulate.samplers import SampleBatch

logger = logging.getLogger(__name__)

DUMP_COLUMNS = ("stream_id", "index", "crossed", "time")


def write_sample_dump(batch: SampleBatch, path: Path, header: Optional[str] = None, compress: bool = False) -> Path:
    """
    Write a batch as CSV; killed samples leave ``time`` empty.

    Gzip output uses ``mtime=0`` so identical batches give identical bytes.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buffer = io.StringIO()
    if header:
        buffer.write(header.rstrip("\n") + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(DUMP_COLUMNS)
    for sid, idx, crossed, time in zip(batch.stream_id, batch.index, batch.crossed, batch.time):
        writer.writerow([int(sid), int(idx), int(bool(crossed)), repr(float(time)) if crossed else ""])
    data = buffer.getvalue().encode("utf-8")
    if compress:
        with open(path, "wb") as raw:
            with gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0) as gz:
                gz.write(data)
    else:
        path.write_bytes(data)
    logger.info(f"Wrote {len(batch)} samples to {path}")
    return path


def read_sample_dump(path: Path) -> SampleBatch:
    """Read a dump written by ``write_sample_dump`` (comment lines skipped)."""
    path = Path(path)
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    lines = [ln for ln in raw.decode("utf-8").splitlines() if ln and not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    crossed = np.array([r["crossed"] == "1" for r in rows], dtype=bool)
    return SampleBatch(
        crossed=crossed,
        time=np.array([float(r["time"]) if r["time"] else np.nan for r in rows]),
        level=np.full(len(rows), np.nan),
        stream_id=np.array([int(r["stream_id"]) for r in rows], dtype=np.int64),
        index=np.array([int(r["index"]) for r in rows], dtype=np.int64),
    )
