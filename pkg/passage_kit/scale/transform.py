"""
First-passage Laplace transforms as ratios of scale functions.

``E_x[e^{-q T_l}; T_l < ζ] = Φ_q(x) / Φ_q(l)`` for ``l <= x``; every family is
evaluated in log space and only the ratio is exponentiated.
"""
import logging
import math
from dataclasses import asdict, dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from passage_kit.exceptions import DomainError, ValidationError
from passage_kit.scale.csbp import csbp_log_phi
from passage_kit.scale.killed_drift import killed_drift_log_ratio, scale_killed_drift
from passage_kit.scale.levy import scale_levy
from passage_kit.scale.pssmp import scale_pssmp
from passage_kit.scale.types import Csbp, KilledDrift, Levy, ProcessSpec, Pssmp, ScaleEval

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TransformValue:
    family: str
    q: float
    x: float
    l: float
    transform: float
    abs_error_bound: float

    def to_dict(self):
        return asdict(self)


def scale_function(spec: ProcessSpec, q: float, x: float) -> ScaleEval:
    """Dispatch Φ_q(x) to the family evaluator."""
    if isinstance(spec, Levy):
        return scale_levy(spec, q, x)
    if isinstance(spec, Pssmp):
        return scale_pssmp(spec, q, x)
    if isinstance(spec, Csbp):
        logs, errs, nodes = csbp_log_phi(spec, q, [x])
        return ScaleEval.from_log(float(logs[0]), rel_error=float(errs[0]), terms_or_nodes=nodes)
    if isinstance(spec, KilledDrift):
        return scale_killed_drift(spec, q, x)
    raise ValidationError(f"unsupported process spec {type(spec).__name__}")


def log_scale_values(spec: ProcessSpec, q: float, xs: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """
    ``log Φ_q`` and relative error bounds at several states.

    CSBP states share a single quadrature; other families are closed-form or
    series and are evaluated one by one.
    """
    xs = np.asarray(xs, dtype=float)
    if isinstance(spec, Csbp):
        logs, errs, _ = csbp_log_phi(spec, q, xs)
        return logs, errs
    evals = [scale_function(spec, q, float(x)) for x in xs]
    logs = np.array([e.log_value for e in evals])
    errs = np.array([e.abs_error_bound / e.value if e.value > 0 and math.isfinite(e.value) else 0.0 for e in evals])
    return logs, errs


def _check_pair(spec: ProcessSpec, q: float, x: float, l: float) -> None:
    if q < 0 or math.isnan(q):
        raise DomainError(f"q must be >= 0, got {q}")
    if l > x:
        raise DomainError(f"level l={l} lies above the start x={x}")
    spec.check_state(x)
    spec.check_state(l)


def first_passage_transform_eval(spec: ProcessSpec, q: float, x: float, l: float) -> TransformValue:
    """Transform value together with its propagated error bound."""
    _check_pair(spec, q, x, l)
    if x == l:
        return TransformValue(spec.family, q, x, l, 1.0, 0.0)
    if isinstance(spec, Levy):
        gap = scale_levy(spec, q, x - l)
        log_ratio, rel = gap.log_value, gap.rel_error
    elif isinstance(spec, KilledDrift):
        log_ratio, rel = killed_drift_log_ratio(spec, q, x, l), 0.0
    else:
        logs, errs = log_scale_values(spec, q, [x, l])
        log_ratio, rel = float(logs[0] - logs[1]), float(errs[0] + errs[1])
    value = min(math.exp(log_ratio), 1.0)
    return TransformValue(spec.family, q, x, l, value, rel * value)


def first_passage_transform(spec: ProcessSpec, q: float, x: float, l: float) -> float:
    """
    ``E_x[e^{-q T_l}; T_l < ζ]`` for ``l <= x``.

    Args:
        spec: Any process family
        q: Laplace variable, ``q >= 0``
        x: Start
        l: Level, ``l <= x``

    Returns:
        Transform value in (0, 1]; exactly 1 when ``x == l``

    Raises:
        DomainError: If ``l > x`` or a state lies outside the family's state space

    Example:
        >>> first_passage_transform(Levy(LevyTriplet(gamma=0.0, sigma2=1.0)), 1.0, 1.0, 0.0)
        0.2431167344342142
    """
    return first_passage_transform_eval(spec, q, x, l).transform


def tabulate_transforms(
    spec: ProcessSpec, qs: Iterable[float], xs: Iterable[float], ls: Iterable[float]
) -> List[TransformValue]:
    """
    Transforms on a grid in q-major, then x, then l order.

    Pairs with ``l > x`` are skipped. For each q all distinct states are
    evaluated once and the ratios formed from the shared log values.
    """
    xs, ls = list(xs), list(ls)
    rows: List[TransformValue] = []
    for q in qs:
        q = float(q)
        states = sorted({float(v) for v in xs + ls})
        pairs = [(float(x), float(l)) for x in xs for l in ls if float(l) <= float(x)]
        if isinstance(spec, (Pssmp, Csbp)):
            for state in states:
                spec.check_state(state)
            if isinstance(spec, Csbp) and q == 0:
                log_map = {s: -spec.z0 * s for s in states}
                err_map = {s: 0.0 for s in states}
            else:
                logs, errs = log_scale_values(spec, q, states)
                log_map = dict(zip(states, logs))
                err_map = dict(zip(states, errs))
            for x, l in pairs:
                _check_pair(spec, q, x, l)
                if x == l:
                    rows.append(TransformValue(spec.family, q, x, l, 1.0, 0.0))
                    continue
                value = min(math.exp(float(log_map[x] - log_map[l])), 1.0)
                rows.append(TransformValue(spec.family, q, x, l, value, float(err_map[x] + err_map[l]) * value))
        else:
            rows.extend(first_passage_transform_eval(spec, q, x, l) for x, l in pairs)
        skipped = len(xs) * len(ls) - len(pairs)
        if skipped:
            logger.debug(f"q={q}: skipped {skipped} pairs with l > x")
    logger.info(f"Tabulated {len(rows)} transforms for family {spec.family}")
    return rows
