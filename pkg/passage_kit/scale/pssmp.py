"""
Series scale function of a self-similar family.

With ``z0 = ψ⁻¹(p)`` and ``g(z) = ψ(z) - p``,

    Φ_q(x) = Σ_k a_k q^k exp(-(z0 + αk) x),   a_k = 1 / ∏_{l=1}^k g(z0 + αl).

Everything is summed in log space; consecutive terms have the ratio
``q e^{-αx} / g(z0 + αk)``, which eventually decays like ``1/k`` or ``1/k²``.
"""
import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import gammaln, logsumexp

from passage_kit.exceptions import DegenerateSpecError, DomainError, NonConvergenceError
from passage_kit.exponent import eval_psi_increment, psi_inverse
from passage_kit.scale.types import Pssmp, ScaleEval

logger = logging.getLogger(__name__)

TERM_REL_TOL = 1e-16
TAIL_REL_TOL = 1e-12
MAX_TERMS = 100_000
BLOCK = 64


@dataclass(frozen=True)
class ScaleSeries:
    """
    Precomputed coefficients ``a_0 .. a_K`` of the series.

    ``log_coeffs`` is authoritative; ``coeffs`` underflows to 0 for large K.
    """
    z0: float
    alpha: float
    log_coeffs: Tuple[float, ...]

    @property
    def K(self) -> int:
        return len(self.log_coeffs) - 1

    @property
    def coeffs(self) -> Tuple[float, ...]:
        return tuple(math.exp(c) for c in self.log_coeffs)


@dataclass(frozen=True)
class CoefficientCondition:
    """
    Growth check on ``k ∈ [K/2, K]``: ``min a_k k²/a_{k-1}`` must stay positive
    and ``max k a_k/a_{k-1}`` finite.
    """
    lower: float
    upper: float
    k_range: Tuple[int, int]
    passed: bool


def _log_factors(spec: Pssmp, z0: float, ks: np.ndarray) -> np.ndarray:
    """``log g(z0 + αk)``; raises on a nonpositive factor."""
    g = np.asarray(eval_psi_increment(spec.triplet, z0, spec.alpha * ks))
    if np.any(~(g > 0)):
        bad = int(ks[np.argmax(~(g > 0))])
        raise DegenerateSpecError(
            f"series factor psi(z0 + alpha*{bad}) - p = {g[np.argmax(~(g > 0))]:.3e} is not positive"
        )
    return np.log(g)


def pssmp_coefficients(spec: Pssmp, K: int) -> ScaleSeries:
    """
    Compute ``a_0 .. a_K`` with ``a_k = 1/∏_{l=1}^k (ψ(z0 + αl) - p)``.

    Raises:
        DomainError: If ``K < 0``
        DegenerateSpecError: On a nonpositive factor
    """
    if K < 0:
        raise DomainError(f"K must be >= 0, got {K}")
    z0 = psi_inverse(spec.triplet, spec.triplet.p).z
    if K == 0:
        return ScaleSeries(z0=z0, alpha=spec.alpha, log_coeffs=(0.0,))
    ks = np.arange(1, K + 1, dtype=float)
    log_coeffs = np.concatenate([[0.0], -np.cumsum(_log_factors(spec, z0, ks))])
    return ScaleSeries(z0=z0, alpha=spec.alpha, log_coeffs=tuple(float(c) for c in log_coeffs))


def coefficient_condition(series: ScaleSeries) -> CoefficientCondition:
    """Check the liminf/limsup growth condition of the coefficients on ``[K/2, K]``."""
    K = series.K
    if K < 2:
        return CoefficientCondition(lower=math.nan, upper=math.nan, k_range=(K, K), passed=False)
    k_lo = max(1, K // 2)
    logs = np.asarray(series.log_coeffs)
    ks = np.arange(k_lo, K + 1, dtype=float)
    log_ratio = logs[k_lo:] - logs[k_lo - 1:-1]
    lower = float(np.min(np.exp(log_ratio + 2.0 * np.log(ks))))
    upper = float(np.max(np.exp(log_ratio + np.log(ks))))
    passed = bool(lower > 0 and math.isfinite(upper))
    logger.debug(f"Coefficient condition on k in [{k_lo}, {K}]: lower={lower:.6g}, upper={upper:.6g}")
    return CoefficientCondition(lower=lower, upper=upper, k_range=(k_lo, K), passed=passed)


def scale_pssmp(spec: Pssmp, q: float, x: float) -> ScaleEval:
    """
    Sum ``Φ_q(x) = Σ_k a_k q^k e^{-(z0 + αk) x}`` to machine precision.

    Terms are generated in blocks. Summation stops at the first term ``t_k`` with
    ``t_k <= 1e-16 S`` whose geometric tail bound ``t_k r / (1 - r)``, with
    ``r = t_k / t_{k-1} < 1``, is below ``1e-12 S``; that bound is reported as
    ``abs_error_bound``.

    Args:
        spec: Self-similar spec
        q: Laplace variable, ``q >= 0``
        x: State (log scale)

    Returns:
        ScaleEval with ``terms_or_nodes`` = number of terms summed

    Raises:
        NonConvergenceError: If the criterion is not met within 10⁵ terms
    """
    spec.check_state(x)
    if q < 0:
        raise DomainError(f"q must be >= 0, got {q}")
    z0 = psi_inverse(spec.triplet, spec.triplet.p).z
    log_first = -z0 * x
    if q == 0:
        return ScaleEval.from_log(log_first, terms_or_nodes=1)

    log_step = math.log(q) - spec.alpha * x
    log_sum = log_first
    log_term = log_first
    k0 = 1
    while k0 <= MAX_TERMS:
        ks = np.arange(k0, k0 + BLOCK, dtype=float)
        log_ratio = log_step - _log_factors(spec, z0, ks)
        log_terms = log_term + np.cumsum(log_ratio)
        # running log partial sums, including the terms of this block
        log_partial = np.logaddexp.accumulate(np.concatenate([[log_sum], log_terms]))[1:]
        small = log_terms - log_partial <= math.log(TERM_REL_TOL)
        contracting = log_ratio < 0
        with np.errstate(divide="ignore"):
            log_tail = log_terms + log_ratio - np.log(-np.expm1(np.minimum(log_ratio, -1e-300)))
        done = small & contracting & (log_tail - log_partial < math.log(TAIL_REL_TOL))
        if np.any(done):
            i = int(np.argmax(done))
            log_sum = float(log_partial[i])
            n_terms = int(ks[i]) + 1
            tail_bound = math.exp(float(log_tail[i]))
            logger.debug(f"pssmp series q={q:.6g} x={x:.6g}: {n_terms} terms, tail bound {tail_bound:.2e}")
            value = math.exp(log_sum) if log_sum < 709.0 else math.inf
            return ScaleEval(
                value=value,
                log_value=log_sum,
                abs_error_bound=tail_bound,
                terms_or_nodes=n_terms,
            )
        log_sum = float(log_partial[-1])
        log_term = float(log_terms[-1])
        k0 += BLOCK

    raise NonConvergenceError(
        f"pssmp series for q={q}, x={x} did not meet its truncation criterion within {MAX_TERMS} terms",
        best=log_sum,
    )


def pssmp_moment(spec: Pssmp, n: int, t: float, x: float) -> float:
    """
    Moment of ``e^{-αnX_t}`` started at ``x`` under the tilted, unkilled law.

    It is the finite sum ``Σ_{k=0}^n (a_{n-k}/a_n) e^{-(n-k)αx} t^k / k!``. When
    ``p = 0`` and ``ψ'(0+) >= 0`` the tilt is trivial and this is the plain moment.
    """
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    if n == 0:
        return 1.0
    logs = np.asarray(pssmp_coefficients(spec, n).log_coeffs)
    k = np.arange(0, n + 1)
    log_t = np.log(t) if t > 0 else -np.inf
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = logs[n - k] - logs[n] - (n - k) * spec.alpha * x + np.where(k > 0, k * log_t, 0.0) - gammaln(k + 1)
    return float(np.exp(logsumexp(terms)))
