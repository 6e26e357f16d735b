"""Aligned text tables of verify reports and fit results, rendered with rich."""
import io
import math
from typing import Any, Iterable, List, Sequence

from rich import box
from rich.console import Console
from rich.table import Table

from passage_kit.identify import FitResult
from passage_kit.verify import DEFAULT_BAND, CalibrationReport, MartingaleReport, MCReport, MultiplicativityReport

TABLE_WIDTH = 132


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "yes" if value else "NO"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.6g}"
    return str(value)


def render_table(title: str, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Plain-text table without colour codes so output is byte-stable."""
    table = Table(title=title, box=box.SIMPLE, show_lines=False)
    for name in columns:
        table.add_column(name, justify="left" if name in ("check", "family", "parameter") else "right")
    for row in rows:
        table.add_row(*(_fmt(v) for v in row))
    buffer = io.StringIO()
    console = Console(file=buffer, width=TABLE_WIDTH, color_system=None, force_terminal=False, legacy_windows=False)
    console.print(table)
    return buffer.getvalue()


def verify_table(reports: List[Any], band: float = DEFAULT_BAND) -> str:
    rows = []
    for r in reports:
        if isinstance(r, MCReport):
            rows.append(["mc_laplace", r.family, r.q, r.x, r.l, r.estimate, r.closed_form, r.std_error, r.z_score, r.passed(band)])
        elif isinstance(r, MartingaleReport):
            worst = max(range(len(r.means)), key=lambda j: abs(r.means[j] - r.target))
            rows.append(["martingale", "levy", r.q, r.x, r.l, r.means[worst], r.target, r.std_errors[worst], r.statistic, r.passed(band)])
        elif isinstance(r, MultiplicativityReport):
            rows.append(["multiplicativity", r.family, r.q, r.x, r.l, r.direct, r.product, r.product_se, r.z_score, r.passed(band)])
        elif isinstance(r, CalibrationReport):
            rows.append(["zscore_calibration", "", "", "", "", r.fraction_above_2, r.threshold, "", "", r.passed(band)])
    columns = ["check", "family", "q", "x", "l", "estimate", "reference", "SE", "z / stat", "passed"]
    return render_table("Verification", columns, rows)


def fit_table(fit: FitResult) -> str:
    rows = [[name, value] for name, value in fit.parameters.items()]
    rows.append(["residual_norm", fit.residual_norm])
    rows.append(["converged", fit.converged])
    return render_table(f"Fit ({fit.hypothesis})", ["parameter", "value"], rows)
