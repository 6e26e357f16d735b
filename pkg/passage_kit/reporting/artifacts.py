"""
Artifact writers. Every file starts with a provenance comment line

    # passage-kit <version> config=<sha256> seed=<seed>

and is otherwise a deterministic function of its inputs.
"""
import csv
import io
import json
import logging
import math
from pathlib import Path
from typing import Any, Iterable, Optional, Union

import numpy as np

from passage_kit import __version__
from passage_kit.scale import TransformValue

logger = logging.getLogger(__name__)

TRANSFORM_COLUMNS = ("family", "q", "x", "l", "value", "abs_error_bound")


def provenance_header(config_hash: str, seed: Optional[int]) -> str:
    """The first line of every artifact."""
    return f"# passage-kit {__version__} config={config_hash} seed={seed if seed is not None else 'none'}"


def _write(path: Union[str, Path], header: str, body: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(header.rstrip("\n") + "\n")
        f.write(body)
    logger.info(f"Wrote {path}")
    return path


def write_text_artifact(path: Union[str, Path], header: str, body: str) -> Path:
    return _write(path, header, body if body.endswith("\n") else body + "\n")


def _json_safe(obj: Any) -> Any:
    """numpy scalars become Python scalars and non-finite floats the strings "inf", "-inf", "nan"."""
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def write_json_artifact(path: Union[str, Path], header: str, payload: Any) -> Path:
    """Header line followed by indented JSON; floats keep their shortest round-trip form."""
    return _write(path, header, json.dumps(_json_safe(payload), indent=2, allow_nan=False) + "\n")


def read_json_artifact(path: Union[str, Path]) -> Any:
    """Load a JSON artifact, skipping its comment lines."""
    text = Path(path).read_text(encoding="utf-8")
    return json.loads("".join(line for line in text.splitlines(keepends=True) if not line.startswith("#")))


def write_transform_csv(rows: Iterable[TransformValue], path: Union[str, Path], header: str) -> Path:
    """Transforms as ``family,q,x,l,value,abs_error_bound`` rows in the given order."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TRANSFORM_COLUMNS)
    for r in rows:
        writer.writerow([r.family, repr(r.q), repr(r.x), repr(r.l), repr(r.transform), repr(r.abs_error_bound)])
    return _write(path, header, buffer.getvalue())
