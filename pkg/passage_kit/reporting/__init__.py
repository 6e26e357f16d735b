"""Artifacts with provenance headers and text tables."""
from passage_kit.reporting.artifacts import (
    provenance_header,
    read_json_artifact,
    write_json_artifact,
    write_text_artifact,
    write_transform_csv,
)
from passage_kit.reporting.tables import fit_table, render_table, verify_table

__all__ = [
    "fit_table",
    "provenance_header",
    "read_json_artifact",
    "render_table",
    "verify_table",
    "write_json_artifact",
    "write_text_artifact",
    "write_transform_csv",
]
