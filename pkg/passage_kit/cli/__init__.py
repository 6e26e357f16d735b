"""Command-line interface."""
from passage_kit.cli.main import main, run

__all__ = ["main", "run"]
