"""
Recovery of a Lévy triplet from its fitted exponent slopes.

``φ(q) = ψ^{-1}(p + q)``, so the triplet solves ``ψ(φ(q)) - p - q = 0`` on the
grid. The diffusion coefficient can also be read off a lattice of exponent
values as ``σ² = lim 2ψ(αn)/(αn)²``.
"""
import logging
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from passage_kit.exceptions import IdentificationError
from passage_kit.exponent import LevyTriplet, eval_psi
from passage_kit.identify.levy_form import PhiGrid
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
from passage_kit.scale import Levy

logger = logging.getLogger(__name__)

MIN_LATTICE_POINTS = 8


def _linear_start(qs: np.ndarray, phis: np.ndarray, hypothesis: Hypothesis, p_known: Optional[float]) -> Dict[str, float]:
    """Starting values from the part of ``ψ(φ) = p + q`` that is linear in the parameters."""
    columns = [phis]
    if hypothesis is not Hypothesis.DRIFT:
        columns.append(0.5 * phis ** 2)
    if p_known is None:
        columns.append(-np.ones_like(phis))
    design = np.column_stack(columns)
    target = qs + (p_known or 0.0)
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    start = {"gamma": -float(coef[0])}
    i = 1
    if hypothesis is not Hypothesis.DRIFT:
        start["sigma2"] = max(float(coef[i]), 1e-3)
        i += 1
    if p_known is None:
        start["p"] = max(float(coef[i]), 0.0)
    return start


def fit_triplet(
    phi: PhiGrid,
    hypothesis: Union[Hypothesis, str],
    p_known: Optional[float] = None,
    initial: Optional[Dict[str, float]] = None,
    restarts: int = DEFAULT_RESTARTS,
    max_nfev: int = MAX_EVALUATIONS,
) -> FitResult:
    """
    Fit the triplet of ``hypothesis`` to a PhiGrid.

    Args:
        phi: Fitted exponent slopes
        hypothesis: ``drift``, ``drift_bm`` or ``drift_bm_exp``
        p_known: Killing rate; fitted along with the rest when None
        initial: Starting values by parameter name
        restarts: Simplex restarts
        max_nfev: Total evaluation budget

    Returns:
        FitResult with a ``Levy`` spec

    Raises:
        IdentificationError: If the grid has fewer points than free parameters
        NonConvergenceError: If no restart converges; ``best`` holds the best fit

    Example:
        >>> qs = (0.5, 1.0, 2.0, 4.0)
        >>> grid = PhiGrid(qs, tuple((2 * q) ** 0.5 for q in qs))
        >>> round(fit_triplet(grid, "drift_bm", p_known=0.0).parameters["sigma2"], 6)
        1.0
    """
    hypothesis = Hypothesis(hypothesis)
    qs, phis = phi.arrays()
    free = len(hypothesis.names) + (1 if p_known is None else 0)
    if len(phi) < free:
        raise IdentificationError(f"{hypothesis.value} with {free} free parameters needs at least {free} phi values, got {len(phi)}")

    start = _linear_start(qs, phis, hypothesis, p_known)
    start.update(initial or {})
    params = hypothesis_parameters(hypothesis, p_known, start)

    def residual(values: Dict[str, float]) -> np.ndarray:
        t = triplet_from_values(values)
        return eval_psi(t, phis) - t.p - qs

    objective = penalised(residual, len(qs))
    result, nfev = minimize_with_restarts(objective, params, restarts=restarts, max_nfev=max_nfev, label="fit_triplet")
    return finish_fit(
        result,
        nfev,
        hypothesis.value,
        lambda values: Levy(triplet_from_values(values)),
        diagnostics={"q_range": [float(qs[0]), float(qs[-1])]},
        label=f"fit_triplet[{hypothesis.value}]",
    )


def psi_lattice(triplet: LevyTriplet, alpha: float, n_max: int) -> List[Tuple[int, float]]:
    """``(n, ψ(αn))`` for ``n = 1..n_max``."""
    ns = np.arange(1, n_max + 1)
    values = eval_psi(triplet, alpha * ns.astype(float))
    return [(int(n), float(v)) for n, v in zip(ns, values)]


def extract_sigma2_lattice(psi_values: Sequence[Tuple[int, float]], alpha: float) -> float:
    """
    Extrapolate ``σ²`` from ``s_n = 2ψ(αn)/(αn)²``.

    ``s_n = σ² + c/n`` is fitted by least squares on the upper half of the
    lattice and the intercept returned; a constant sequence is returned as is.

    Raises:
        IdentificationError: On fewer than 8 lattice points or ``alpha <= 0``
    """
    if alpha <= 0:
        raise IdentificationError(f"alpha must be > 0, got {alpha}")
    if len(psi_values) < MIN_LATTICE_POINTS:
        raise IdentificationError(f"need at least {MIN_LATTICE_POINTS} lattice points, got {len(psi_values)}")
    pairs = sorted((int(n), float(v)) for n, v in psi_values)
    ns = np.array([n for n, _ in pairs], dtype=float)
    if ns[0] < 1:
        raise IdentificationError("lattice indices must be >= 1")
    s = 2.0 * np.array([v for _, v in pairs]) / (alpha * ns) ** 2
    upper = slice(len(ns) // 2, None)
    ns, s = ns[upper], s[upper]
    if np.ptp(s) == 0:
        return float(s[0])
    design = np.column_stack([np.ones_like(ns), 1.0 / ns])
    (intercept, slope), *_ = np.linalg.lstsq(design, s, rcond=None)
    logger.debug(f"Lattice extrapolation on n in [{int(ns[0])}, {int(ns[-1])}]: sigma2={intercept:.8g}, c={slope:.4g}")
    return float(intercept)
