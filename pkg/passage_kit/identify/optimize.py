"""
Shared fitting machinery: hypotheses, restarted lmfit minimisation and results.
"""
import copy
import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np
from lmfit import Minimizer, Parameters

from passage_kit.exceptions import NonConvergenceError, PassageKitError, ValidationError
from passage_kit.exponent import ExpMixture, LevyTriplet, NoJumps
from passage_kit.scale import ProcessSpec

logger = logging.getLogger(__name__)

DEFAULT_RESTARTS = 5
MAX_EVALUATIONS = 10_000
RESTART_SEED = 20240601
# residual entry used where a parameter set cannot be evaluated
PENALTY = 1e3
EXACT_TOL = 1e-16


class Hypothesis(str, enum.Enum):
    """Parametric shape of the exponent ``ψ``."""
    DRIFT = "drift"
    DRIFT_BM = "drift_bm"
    DRIFT_BM_EXP = "drift_bm_exp"

    @property
    def names(self) -> Tuple[str, ...]:
        return {
            Hypothesis.DRIFT: ("gamma",),
            Hypothesis.DRIFT_BM: ("gamma", "sigma2"),
            Hypothesis.DRIFT_BM_EXP: ("gamma", "sigma2", "jump_rate", "jump_scale"),
        }[self]


def hypothesis_parameters(
    hypothesis: Hypothesis,
    p_known: Optional[float],
    initial: Optional[Dict[str, float]] = None,
) -> Parameters:
    """
    lmfit Parameters of a hypothesis, with ``p`` free when ``p_known`` is None.

    ``initial`` overrides the default starting values by name.
    """
    hypothesis = Hypothesis(hypothesis)
    start = {"gamma": 0.0, "sigma2": 1.0, "jump_rate": 1.0, "jump_scale": 1.0, "p": 0.1}
    start.update(initial or {})
    params = Parameters()
    params.add("gamma", value=start["gamma"])
    if "sigma2" in hypothesis.names:
        params.add("sigma2", value=max(start["sigma2"], 0.0), min=0.0)
    if "jump_rate" in hypothesis.names:
        params.add("jump_rate", value=max(start["jump_rate"], 1e-6), min=1e-10)
        params.add("jump_scale", value=max(start["jump_scale"], 1e-6), min=1e-10)
    if p_known is None:
        params.add("p", value=max(start["p"], 0.0), min=0.0)
    else:
        if p_known < 0:
            raise ValidationError(f"p_known must be >= 0, got {p_known}")
        params.add("p", value=float(p_known), vary=False)
    return params


def triplet_from_values(values: Dict[str, float]) -> LevyTriplet:
    """Build the triplet a parameter set describes."""
    jumps = NoJumps()
    if "jump_rate" in values:
        jumps = ExpMixture(((values["jump_rate"], values["jump_scale"]),))
    return LevyTriplet(
        gamma=float(values["gamma"]),
        sigma2=float(values.get("sigma2", 0.0)),
        jumps=jumps,
        p=float(values.get("p", 0.0)),
    )


def penalised(func: Callable[[Dict[str, float]], np.ndarray], size: int) -> Callable[[Parameters], np.ndarray]:
    """Wrap a residual function of plain values so unevaluable points return a flat penalty."""
    def objective(params: Parameters) -> np.ndarray:
        values = params.valuesdict()
        try:
            with np.errstate(all="ignore"):
                residual = np.asarray(func(values), dtype=float)
        except (PassageKitError, ValueError, FloatingPointError, OverflowError) as e:
            logger.debug(f"Penalised parameters {values}: {e}")
            return np.full(size, PENALTY)
        if residual.shape != (size,) or not np.all(np.isfinite(residual)):
            return np.full(size, PENALTY)
        return residual
    return objective


@dataclass
class FitResult:
    """
    Outcome of a fit.

    ``spec`` is None when the data only determines part of the model (a
    ``z0``-only fit). ``residual_norm`` is the Euclidean norm of the residuals.
    """
    spec: Optional[ProcessSpec]
    residual_norm: float
    parameters: Dict[str, float]
    converged: bool
    hypothesis: str
    n_points: int
    nfev: int = 0
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        """Residual sum of squares at the noiseless-data level."""
        return self.residual_norm ** 2 <= EXACT_TOL * max(self.n_points, 1)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "hypothesis": self.hypothesis,
            "spec": self.spec.to_dict() if self.spec is not None else None,
            "parameters": dict(self.parameters),
            "residual_norm": self.residual_norm,
            "converged": self.converged,
            "n_points": self.n_points,
            "nfev": self.nfev,
            "diagnostics": self.diagnostics,
        }


def _perturb(params: Parameters, rng: np.random.Generator) -> Parameters:
    out = copy.deepcopy(params)
    for par in out.values():
        if not par.vary:
            continue
        value = par.value
        value = value * math.exp(0.5 * rng.standard_normal()) if value != 0 else 0.5 * rng.standard_normal()
        lo = par.min if math.isfinite(par.min) else -math.inf
        hi = par.max if math.isfinite(par.max) else math.inf
        if value <= lo:
            value = lo + 1e-3 * max(1.0, abs(lo))
        par.set(value=min(value, hi))
    return out


def minimize_with_restarts(
    objective: Callable[[Parameters], np.ndarray],
    params: Parameters,
    restarts: int = DEFAULT_RESTARTS,
    max_nfev: int = MAX_EVALUATIONS,
    label: str = "fit",
):
    """
    Nelder–Mead from ``params`` and from perturbed restarts, each polished by least squares.

    Restart seeds are fixed so fits are reproducible. Later restarts are skipped
    once a fit reaches the noiseless-data residual level.

    Returns:
        Tuple of the best lmfit MinimizerResult and the total function evaluations
    """
    rng = np.random.default_rng(RESTART_SEED)
    per_round = max(max_nfev // (2 * max(restarts, 1)), 50)
    best = None
    total = 0
    for attempt in range(max(restarts, 1)):
        start = params if attempt == 0 else _perturb(params, rng)
        simplex = Minimizer(objective, start).minimize(method="nelder", max_nfev=per_round)
        polished = Minimizer(objective, simplex.params).minimize(method="least_squares", max_nfev=per_round)
        total += simplex.nfev + polished.nfev
        candidate = polished if polished.chisqr <= simplex.chisqr else simplex
        logger.debug(f"{label} restart {attempt}: chi-square {candidate.chisqr:.3e} after {total} evaluations")
        if best is None or candidate.chisqr < best.chisqr:
            best = candidate
        if best.chisqr <= EXACT_TOL * max(best.ndata, 1) or total >= max_nfev:
            break
    return best, total


def finish_fit(
    result,
    nfev: int,
    hypothesis: str,
    spec_builder: Callable[[Dict[str, float]], ProcessSpec],
    diagnostics: Optional[Dict[str, Any]] = None,
    label: str = "fit",
) -> FitResult:
    """
    Turn a minimiser result into a FitResult.

    Raises:
        NonConvergenceError: If the best residual is still the penalty, or the
            minimiser failed without reaching the noiseless level; ``best``
            carries the FitResult
    """
    values = {k: float(v) for k, v in result.params.valuesdict().items()}
    residual_norm = float(math.sqrt(result.chisqr))
    penalised_best = bool(np.all(np.asarray(result.residual) == PENALTY))
    spec = None if penalised_best else spec_builder(values)
    fit = FitResult(
        spec=spec,
        residual_norm=residual_norm,
        parameters=values,
        converged=False,
        hypothesis=hypothesis,
        n_points=int(result.ndata),
        nfev=nfev,
        diagnostics=dict(diagnostics or {}),
    )
    fit.converged = not penalised_best and (bool(result.success) or fit.exact)
    if not fit.converged:
        raise NonConvergenceError(
            f"{label} did not converge after {nfev} evaluations (residual norm {residual_norm:.3e})",
            best=fit,
        )
    logger.info(f"{label}: residual norm {residual_norm:.3e} after {nfev} evaluations, parameters {values}")
    return fit
