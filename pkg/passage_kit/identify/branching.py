"""Fit of a branching mechanism to CSBP transform data."""
import logging
import math
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from passage_kit.exceptions import DegenerateSpecError, NonConvergenceError
from passage_kit.exponent import eval_psi
from passage_kit.identify.grid import TransformEntry, TransformGrid
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
from passage_kit.identify.self_similar import informative_groups
from passage_kit.scale import Csbp, CsbpKernel, CsbpVariant, csbp_variant

logger = logging.getLogger(__name__)

# offsets above z0 at which the fitted mechanism is reported
REPORT_OFFSETS = (0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0)


def _model(spec: Csbp, groups: Dict[float, List[TransformEntry]], kernel: CsbpKernel) -> np.ndarray:
    """Log ratios from a private kernel, so trial mechanisms never enter the shared cache."""
    out = []
    for q, entries in groups.items():
        states = sorted({e.x for e in entries} | {e.l for e in entries})
        if q == 0:
            logs = -spec.z0 * np.asarray(states)
        else:
            form = "extinct" if spec.variant is CsbpVariant.EXTINCT else "second"
            logs, _, _ = kernel.log_phi(q, np.asarray(states), form, theta=spec.theta)
        lookup = dict(zip(states, np.asarray(logs, dtype=float)))
        out.extend(lookup[e.x] - lookup[e.l] for e in entries)
    return np.asarray(out, dtype=float)


def _drift_start(entries: Sequence[TransformEntry]) -> Optional[float]:
    """Linear-mechanism guess ``b`` from ``value = (x/l)^{-q/b}``."""
    guesses = [
        e.q * math.log(e.x / e.l) / -math.log(e.value)
        for e in entries
        if e.q > 0 and e.l > 0 and e.value < 1
    ]
    return float(np.median(guesses)) if guesses else None


def fit_csbp(
    data: TransformGrid,
    variant: Union[CsbpVariant, str],
    hypothesis: Union[Hypothesis, str],
    p_known: Optional[float] = 0.0,
    initial: Optional[Dict[str, float]] = None,
    restarts: int = DEFAULT_RESTARTS,
    max_nfev: int = MAX_EVALUATIONS,
    report_offsets: Sequence[float] = REPORT_OFFSETS,
) -> FitResult:
    """
    Fit ``ψ`` of a CSBP of the given variant to transform data.

    Trial mechanisms of the other variant cannot be evaluated and are
    penalised; if the best fit still has the wrong variant the hypothesis is
    rejected. The fitted ``g = ψ - p`` is reported at ``z0 + report_offsets``.

    Raises:
        IdentificationError: On no informative rows
        DegenerateSpecError: Variant mismatch of the fitted mechanism
        NonConvergenceError: If no restart converges
    """
    variant = CsbpVariant(variant)
    hypothesis = Hypothesis(hypothesis)
    groups, dropped = informative_groups(data)
    entries = [e for group in groups.values() for e in group]
    observed = np.array([math.log(e.value) for e in entries])

    start = dict(initial or {})
    if "gamma" not in start and hypothesis is Hypothesis.DRIFT:
        b = _drift_start(entries)
        if b is not None:
            start["gamma"] = -b
    params = hypothesis_parameters(hypothesis, p_known, start)

    def build(values: Dict[str, float]) -> Csbp:
        return Csbp(triplet_from_values(values), variant)

    def residual(values: Dict[str, float]) -> np.ndarray:
        spec = build(values)
        kernel = CsbpKernel(spec.triplet)
        if kernel.variant is not variant:
            raise DegenerateSpecError("trial mechanism has the wrong variant")
        return _model(spec, groups, kernel) - observed

    objective = penalised(residual, len(entries))
    result, nfev = minimize_with_restarts(objective, params, restarts=restarts, max_nfev=max_nfev, label="fit_csbp")
    try:
        fit = finish_fit(result, nfev, hypothesis.value, build, diagnostics={"excluded_rows": dropped}, label="fit_csbp")
    except NonConvergenceError as e:
        if e.best is not None and e.best.spec is None:
            raise DegenerateSpecError(
                f"no {hypothesis.value} mechanism of the {variant.value} variant fits the data (variant mismatch)"
            ) from e
        raise

    triplet = fit.spec.triplet
    actual = csbp_variant(triplet)
    if actual is not variant:
        raise DegenerateSpecError(f"variant mismatch: fitted mechanism is {actual.value}, data declared {variant.value}")
    z0 = fit.spec.z0
    zs = z0 + np.asarray(report_offsets, dtype=float)
    fit.parameters["z0"] = z0
    fit.diagnostics["mechanism"] = {
        "z": zs.tolist(),
        "g": (np.asarray(eval_psi(triplet, zs)) - triplet.p).tolist(),
    }
    return fit
