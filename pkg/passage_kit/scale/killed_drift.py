"""Scale function of a deterministic downward drift with killing."""
import logging

from passage_kit.exceptions import DomainError
from passage_kit.scale.types import KilledDrift, ScaleEval

logger = logging.getLogger(__name__)


def killed_drift_log_ratio(spec: KilledDrift, q: float, x: float, l: float) -> float:
    """``log E_x[e^{-qT_l}; T_l < ζ] = -∫_l^x ω/v - q (V(x) - V(l))``."""
    return -spec.killing_integral(l, x) - q * spec.travel_time(l, x)


def scale_killed_drift(spec: KilledDrift, q: float, x: float) -> ScaleEval:
    """
    Evaluate ``Φ_q(x) = exp(-∫_θ^x ω/v - q V(x))`` with ``V(a) = ∫_θ^a dy/v``.

    Both integrals are closed-form for the power-law speeds and killing rates,
    so the value is exact up to rounding.
    """
    spec.check_state(x)
    if q < 0:
        raise DomainError(f"q must be >= 0, got {q}")
    return ScaleEval.from_log(killed_drift_log_ratio(spec, q, x, spec.theta), terms_or_nodes=1)
