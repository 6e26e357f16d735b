"""Fit of a self-similar family to transform data through its series scale function."""
import logging
import math
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from passage_kit.exceptions import IdentificationError
from passage_kit.exponent import psi_inverse
from passage_kit.identify.grid import TransformEntry, TransformGrid, gap_arrays
from passage_kit.identify.optimize import (
    DEFAULT_RESTARTS,
    MAX_EVALUATIONS,
    FitResult,
    Hypothesis,
    finish_fit,
    hypothesis_parameters,
    minimize_with_restarts,
    penalised,
    triplet_from_values,
)
from passage_kit.scale import Pssmp, coefficient_condition, log_scale_values, pssmp_coefficients

logger = logging.getLogger(__name__)

REPORTED_COEFFICIENTS = 32


def log_ratio_model(spec, groups: Dict[float, List[TransformEntry]]) -> np.ndarray:
    """``log Φ_q(x) - log Φ_q(l)`` for every entry, one scale evaluation per distinct state and q."""
    out = []
    for q, entries in groups.items():
        states = sorted({e.x for e in entries} | {e.l for e in entries})
        logs, _ = log_scale_values(spec, q, states)
        lookup = dict(zip(states, np.asarray(logs, dtype=float)))
        out.extend(lookup[e.x] - lookup[e.l] for e in entries)
    return np.asarray(out, dtype=float)


def informative_groups(data: TransformGrid) -> Tuple[Dict[float, List[TransformEntry]], int]:
    """Trusted entries with ``x > l`` grouped by q, and the number of ``x = l`` rows dropped."""
    groups, dropped = {}, 0
    for q, entries in data.by_q().items():
        kept = [e for e in entries if e.gap > 0]
        dropped += len(entries) - len(kept)
        if kept:
            groups[q] = kept
    if dropped:
        logger.info(f"Excluded {dropped} uninformative rows with x = l")
    if not groups:
        raise IdentificationError("no trusted rows with x > l")
    return groups, dropped


def fit_pssmp(
    data: TransformGrid,
    alpha: float,
    hypothesis: Union[Hypothesis, str],
    p_known: Optional[float] = 0.0,
    initial: Optional[Dict[str, float]] = None,
    restarts: int = DEFAULT_RESTARTS,
    max_nfev: int = MAX_EVALUATIONS,
) -> FitResult:
    """
    Fit the driving exponent of a self-similar family with index ``alpha``.

    Residuals are ``log(model ratio) - log(value)``. With only ``q = 0`` rows the
    transform is ``e^{-z0 (x - l)}`` and ``z0`` alone is fitted in closed form;
    the result then carries no spec. Otherwise the fitted series coefficients
    ``a_0..a_K`` and their growth check are reported in the diagnostics.

    Raises:
        IdentificationError: On no informative rows or ``alpha <= 0``
        NonConvergenceError: If no restart converges
    """
    if not alpha > 0:
        raise IdentificationError(f"alpha must be > 0, got {alpha}")
    hypothesis = Hypothesis(hypothesis)
    groups, dropped = informative_groups(data)
    entries = [e for group in groups.values() for e in group]

    if set(groups) == {0.0}:
        gaps, targets = gap_arrays(entries)
        z0 = max(float(gaps @ targets / (gaps @ gaps)), 0.0)
        residual_norm = float(np.linalg.norm(targets - z0 * gaps))
        logger.info(f"fit_pssmp: only q = 0 rows, fitted z0={z0:.12g}")
        return FitResult(
            spec=None,
            residual_norm=residual_norm,
            parameters={"z0": z0},
            converged=True,
            hypothesis="z0_only",
            n_points=len(entries),
            diagnostics={"excluded_rows": dropped},
        )

    observed = np.array([math.log(e.value) for e in entries])

    def build(values: Dict[str, float]) -> Pssmp:
        return Pssmp(triplet_from_values(values), alpha)

    def residual(values: Dict[str, float]) -> np.ndarray:
        return log_ratio_model(build(values), groups) - observed

    params = hypothesis_parameters(hypothesis, p_known, initial)
    objective = penalised(residual, len(entries))
    result, nfev = minimize_with_restarts(objective, params, restarts=restarts, max_nfev=max_nfev, label="fit_pssmp")
    fit = finish_fit(result, nfev, hypothesis.value, build, diagnostics={"excluded_rows": dropped}, label="fit_pssmp")

    z0 = psi_inverse(fit.spec.triplet, fit.spec.triplet.p).z
    series = pssmp_coefficients(fit.spec, REPORTED_COEFFICIENTS)
    condition = coefficient_condition(series)
    fit.parameters["z0"] = z0
    fit.diagnostics.update(
        {
            "coefficients": list(series.coeffs),
            "coefficient_condition": {
                "lower": condition.lower,
                "upper": condition.upper,
                "k_range": list(condition.k_range),
                "passed": condition.passed,
            },
        }
    )
    if not condition.passed:
        logger.warning(f"Fitted coefficients fail the growth check: lower={condition.lower}, upper={condition.upper}")
    return fit
