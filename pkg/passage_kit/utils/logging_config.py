"""
Root logger setup for passage-kit runs.

Records go to stderr, and optionally to a rotating file, as plain text or as
one JSON object per line. Each record is stamped with the run's provenance
(config hash and seed) so that log lines from concurrent experiments can be
told apart after the fact.
"""
import json
import logging
import logging.handlers
import sys
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

TEXT_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - [%(run)s] %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'
LOG_FILE_BYTES = 10 * 1024 * 1024
LOG_FILE_BACKUPS = 3

# Attributes every LogRecord carries; the rest came in through ``extra=``.
_RECORD_ATTRS = frozenset(vars(logging.LogRecord('', 0, '', 0, '', None, None))) | {'message', 'asctime'}


class RunContextFilter(logging.Filter):
    """Attach run provenance to every record passing a handler."""

    def __init__(self, context: Optional[Mapping[str, Any]] = None):
        super().__init__()
        self.context = dict(context or {})
        self.tag = " ".join(f"{k}={v}" for k, v in self.context.items()) or "-"

    def filter(self, record: logging.LogRecord) -> bool:
        for key, value in self.context.items():
            if not hasattr(record, key):
                setattr(record, key, value)
        record.run = self.tag
        return True


class JsonFormatter(logging.Formatter):
    """One JSON object per record; ``extra`` fields are kept as top-level keys."""

    def format(self, record: logging.LogRecord) -> str:
        payload: Dict[str, Any] = {
            'timestamp': self.formatTime(record, DATE_FORMAT),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
        }
        if record.exc_info:
            payload['exception'] = self.formatException(record.exc_info)
        payload.update(
            (key, value) for key, value in vars(record).items()
            if key not in _RECORD_ATTRS and key != 'run' and not key.startswith('_')
        )
        return json.dumps(payload, default=str)


def _file_handler(path: Path, rotate: bool) -> logging.Handler:
    path.parent.mkdir(parents=True, exist_ok=True)
    if rotate:
        return logging.handlers.RotatingFileHandler(
            path, maxBytes=LOG_FILE_BYTES, backupCount=LOG_FILE_BACKUPS, encoding='utf-8'
        )
    return logging.FileHandler(path, encoding='utf-8')


def setup_logging(
    level: str = "INFO",
    log_file: Optional[str] = None,
    enable_json: bool = False,
    enable_rotation: bool = True,
    context: Optional[Mapping[str, Any]] = None,
) -> None:
    """
    Replace the root logger's handlers for one run.

    Args:
        level: Logging level name, case-insensitive
        log_file: Also write records to this file when given
        enable_json: Emit JSON lines instead of text
        enable_rotation: Rotate ``log_file`` at 10MB, keeping three backups
        context: Provenance stamped on every record, e.g. ``config_hash`` and ``seed``
    """
    log_level = getattr(logging, level.upper(), logging.INFO)
    root = logging.getLogger()
    root.handlers = []
    root.setLevel(log_level)

    formatter = JsonFormatter() if enable_json else logging.Formatter(TEXT_FORMAT, datefmt=DATE_FORMAT)
    run_filter = RunContextFilter(context)

    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(_file_handler(Path(log_file), enable_rotation))
    for handler in handlers:
        handler.setLevel(log_level)
        handler.setFormatter(formatter)
        handler.addFilter(run_filter)
        root.addHandler(handler)
