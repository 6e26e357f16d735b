"""Scale function of a killed spectrally positive Lévy process."""
import logging
import math

from passage_kit.exceptions import DomainError
from passage_kit.exponent import eval_psi_prime, psi_inverse
from passage_kit.scale.types import Levy, ScaleEval

logger = logging.getLogger(__name__)


def levy_exponent_slope(spec: Levy, q: float) -> float:
    """The passage exponent ``ψ⁻¹(p + q)`` of ``E_x[e^{-qT}] = e^{-ψ⁻¹(p+q)(x - l)}``."""
    if q < 0:
        raise DomainError(f"q must be >= 0, got {q}")
    return psi_inverse(spec.triplet, spec.triplet.p + q).z


def scale_levy(spec: Levy, q: float, x: float) -> ScaleEval:
    """
    Evaluate ``Φ_q(x) = exp(-ψ⁻¹(p + q) x)``.

    The error bound propagates the root residual through ``dz = residual / ψ'(z)``.

    Args:
        spec: Lévy process spec
        q: Laplace variable, ``q >= 0``
        x: State

    Returns:
        ScaleEval with ``terms_or_nodes`` set to the root iterations
    """
    spec.check_state(x)
    if q < 0:
        raise DomainError(f"q must be >= 0, got {q}")
    root = psi_inverse(spec.triplet, spec.triplet.p + q)
    log_value = -root.z * x
    rel_error = 0.0
    if root.residual > 0 and root.z > 0:
        slope = eval_psi_prime(spec.triplet, root.z)
        if slope > 0:
            rel_error = abs(x) * root.residual / slope
    return ScaleEval.from_log(log_value, rel_error=rel_error, terms_or_nodes=root.iterations)
