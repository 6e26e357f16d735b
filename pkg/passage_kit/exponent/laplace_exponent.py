"""
Laplace exponents of spectrally positive Lévy processes.

The exponent of a triplet ``(γ, σ², m)`` is

    ψ(z) = -γ z + σ² z² / 2 + ∫ (e^{-zh} + z h 1_(0,1](h) - 1) m(dh),   z >= 0,

so that ``E[exp(-z X_t)] = exp(t ψ(z))``. The compensator is folded into the
effective drift ``d = γ - ∫_(0,1] h m(dh)``, the velocity of the paths between
jumps, leaving ``ψ(z) = -d z + σ² z² / 2 + J(z)`` with the family term ``J``.
Killing at rate ``p`` is carried on the triplet but never applied here; callers
work with ``ψ - p``.
"""
import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Tuple, Union

import numpy as np

from passage_kit.exceptions import DomainError, NonConvergenceError, ValidationError
from passage_kit.exponent.jump_measures import (
    ArrayLike,
    Atoms,
    ExpMixture,
    JumpMeasureSpec,
    NoJumps,
    jump_measure_from_dict,
)
from passage_kit.exponent.roots import newton_bisection

logger = logging.getLogger(__name__)

ROOT_REL_TOL = 1e-12
MAX_BRACKET_DOUBLINGS = 200
SUBORDINATOR_HORIZON = 1e6


@dataclass(frozen=True)
class LevyTriplet:
    """
    Characteristics of a spectrally positive Lévy process plus a killing rate.

    Attributes:
        gamma: Drift γ [space/time]
        sigma2: Gaussian variance σ² >= 0 [space²/time]
        jumps: Finite-activity jump measure m
        p: Killing rate >= 0 [1/time]
    """
    gamma: float
    sigma2: float = 0.0
    jumps: JumpMeasureSpec = field(default_factory=NoJumps)
    p: float = 0.0

    def __post_init__(self):
        if isinstance(self.jumps, Mapping) or self.jumps is None:
            object.__setattr__(self, "jumps", jump_measure_from_dict(self.jumps))
        if not isinstance(self.jumps, (NoJumps, ExpMixture, Atoms)):
            raise ValidationError(f"unsupported jump measure: {type(self.jumps).__name__}")
        for name in ("gamma", "sigma2", "p"):
            value = getattr(self, name)
            try:
                value = float(value)
            except (TypeError, ValueError) as e:
                raise ValidationError(f"{name} must be a real number, got {value!r}") from e
            if not math.isfinite(value):
                raise ValidationError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.sigma2 < 0:
            raise ValidationError(f"sigma2 must be >= 0, got {self.sigma2}")
        if self.p < 0:
            raise ValidationError(f"p must be >= 0, got {self.p}")

    @property
    def effective_drift(self) -> float:
        return effective_drift(self)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "gamma": self.gamma,
            "sigma2": self.sigma2,
            "jumps": self.jumps.to_dict(),
            "p": self.p,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "LevyTriplet":
        if not isinstance(data, Mapping):
            raise ValidationError(f"triplet must be an object, got {type(data).__name__}")
        unknown = set(data) - {"gamma", "sigma2", "jumps", "p"}
        if unknown:
            raise ValidationError(f"unknown triplet fields: {sorted(unknown)}")
        if "gamma" not in data:
            raise ValidationError("triplet is missing 'gamma'")
        return cls(
            gamma=data["gamma"],
            sigma2=data.get("sigma2", 0.0),
            jumps=jump_measure_from_dict(data.get("jumps")),
            p=data.get("p", 0.0),
        )


@dataclass(frozen=True)
class PsiInverseResult:
    """The largest root ``z`` of ``ψ(z) = q``."""
    z: float
    residual: float
    iterations: int


@dataclass(frozen=True)
class TripletDiagnostics:
    passed: bool
    reasons: Tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.passed


def _check_domain(z: ArrayLike, strict: bool, what: str) -> None:
    arr = np.asarray(z, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError(f"{what}: argument contains NaN")
    bad = np.any(arr <= 0) if strict else np.any(arr < 0)
    if bad:
        bound = "> 0" if strict else ">= 0"
        raise DomainError(f"{what}: argument must be {bound}, got min {float(arr.min())}")


def effective_drift(t: LevyTriplet) -> float:
    """Path velocity between jumps, ``γ - ∫_(0,1] h m(dh)``."""
    return t.gamma - t.jumps.small_jump_mean


def eval_psi(t: LevyTriplet, z: ArrayLike) -> ArrayLike:
    """
    Evaluate ψ(z) without the killing term.

    Args:
        t: Lévy triplet
        z: Scalar or array of nonnegative arguments

    Returns:
        ψ(z), same shape as ``z``

    Raises:
        DomainError: If any ``z < 0``

    Example:
        >>> eval_psi(LevyTriplet(gamma=-1.0, sigma2=1.0), 1.0)
        1.5
    """
    _check_domain(z, strict=False, what="eval_psi")
    zz = np.asarray(z, dtype=float) if isinstance(z, np.ndarray) else float(z)
    return -effective_drift(t) * zz + 0.5 * t.sigma2 * zz * zz + t.jumps.laplace_part(zz)


def eval_psi_prime(t: LevyTriplet, z: ArrayLike) -> ArrayLike:
    """Closed-form ψ'(z) for ``z > 0``."""
    _check_domain(z, strict=True, what="eval_psi_prime")
    zz = np.asarray(z, dtype=float) if isinstance(z, np.ndarray) else float(z)
    return -effective_drift(t) + t.sigma2 * zz + t.jumps.laplace_prime(zz)


def eval_psi_second(t: LevyTriplet, z: ArrayLike) -> ArrayLike:
    _check_domain(z, strict=False, what="eval_psi_second")
    zz = np.asarray(z, dtype=float) if isinstance(z, np.ndarray) else float(z)
    return t.sigma2 + t.jumps.laplace_second(zz)


def psi_prime_at_zero(t: LevyTriplet) -> float:
    """Right derivative ψ'(0+), equal to ``-E[X_1]``."""
    return -effective_drift(t) + t.jumps.laplace_prime(0.0)


def eval_psi_increment(t: LevyTriplet, z0: float, eps: ArrayLike) -> ArrayLike:
    """
    ``ψ(z0 + ε) - ψ(z0)`` without the cancellation of a plain difference.

    Needed where ``ψ - p`` is evaluated just above ``ψ⁻¹(p)`` and both terms agree
    to many digits.
    """
    _check_domain(z0, strict=False, what="eval_psi_increment")
    _check_domain(eps, strict=False, what="eval_psi_increment")
    ee = np.asarray(eps, dtype=float) if isinstance(eps, np.ndarray) else float(eps)
    gaussian = 0.5 * t.sigma2 * ee * (2.0 * z0 + ee)
    return -effective_drift(t) * ee + gaussian + t.jumps.increment(z0, ee)


def _psi_scalar(t: LevyTriplet, z: float) -> float:
    return -effective_drift(t) * z + 0.5 * t.sigma2 * z * z + t.jumps.laplace_part(z)


def _psi_prime_scalar(t: LevyTriplet, z: float) -> float:
    return -effective_drift(t) + t.sigma2 * z + t.jumps.laplace_prime(z)


def psi_minimizer(t: LevyTriplet) -> float:
    """The point z* where ψ attains its minimum on [0, inf)."""
    slope0 = psi_prime_at_zero(t)
    if slope0 >= 0.0:
        return 0.0
    hi = 1.0
    for _ in range(MAX_BRACKET_DOUBLINGS):
        if _psi_prime_scalar(t, hi) > 0.0:
            break
        hi *= 2.0
    else:
        raise NonConvergenceError(
            f"ψ' stays nonpositive up to {hi:.3e}; triplet behaves like a subordinator", best=hi
        )
    result = newton_bisection(
        lambda z: _psi_prime_scalar(t, z),
        lambda z: t.sigma2 + t.jumps.laplace_second(z),
        0.0,
        hi,
        abs_tol=ROOT_REL_TOL * max(1.0, abs(slope0)),
    )
    return result.root


@functools.lru_cache(maxsize=8192)
def _psi_inverse_cached(t: LevyTriplet, q: float) -> PsiInverseResult:
    lo = psi_minimizer(t)
    if q == 0.0 and lo == 0.0:
        return PsiInverseResult(z=0.0, residual=0.0, iterations=0)

    hi = max(1.0, 2.0 * lo)
    doublings = 0
    while _psi_scalar(t, hi) <= q:
        doublings += 1
        if doublings > MAX_BRACKET_DOUBLINGS:
            raise NonConvergenceError(
                f"psi_inverse bracket expansion failed for q={q} after "
                f"{MAX_BRACKET_DOUBLINGS} doublings (subordinator-like triplet?)",
                best=hi,
            )
        hi *= 2.0

    result = newton_bisection(
        lambda z: _psi_scalar(t, z) - q,
        lambda z: _psi_prime_scalar(t, z) if z > 0 else math.nan,
        lo,
        hi,
        abs_tol=ROOT_REL_TOL * max(1.0, q),
    )
    logger.debug(
        f"psi_inverse(q={q:.6g}) = {result.root:.17g} "
        f"(residual {result.residual:.2e}, {result.iterations} iterations, {doublings} doublings)"
    )
    return PsiInverseResult(z=result.root, residual=result.residual, iterations=result.iterations)


def psi_inverse(t: LevyTriplet, q: float) -> PsiInverseResult:
    """
    Right-continuous inverse of ψ: the largest ``z >= 0`` with ``ψ(z) = q``.

    The bracket starts at the minimiser z* of ψ (0 when ψ'(0+) >= 0) and its
    upper end doubles until ``ψ(b) > q``; a safeguarded Newton–bisection then
    solves to ``|ψ(z) - q| <= 1e-12 max(1, q)``.

    Args:
        t: Lévy triplet
        q: Level, ``q >= 0``

    Returns:
        PsiInverseResult

    Raises:
        DomainError: If ``q < 0``
        NonConvergenceError: If no bracket is found within 200 doublings

    Example:
        >>> psi_inverse(LevyTriplet(gamma=1.0, sigma2=1.0), 0.0).z
        2.0
    """
    q = float(q)
    if math.isnan(q) or q < 0:
        raise DomainError(f"psi_inverse: q must be >= 0, got {q}")
    return _psi_inverse_cached(t, q)


def validate_triplet(t: Union[LevyTriplet, Mapping[str, Any]]) -> TripletDiagnostics:
    """
    Check a triplet (or its JSON form) and report every problem found.

    Field invariants are checked at construction. A triplet is then rejected as a
    subordinator when ψ is nonincreasing on ``[0, 10⁶]``; by convexity this is
    ``ψ'(10⁶) <= 0``, which for these families happens exactly when ``σ² = 0``
    and the effective drift is nonnegative.
    """
    reasons = []
    if not isinstance(t, LevyTriplet):
        try:
            t = LevyTriplet.from_dict(t)
        except ValidationError as e:
            return TripletDiagnostics(passed=False, reasons=(str(e),))

    slope = _psi_prime_scalar(t, SUBORDINATOR_HORIZON)
    if not slope > 0.0:
        reasons.append(
            f"subordinator: ψ is nonincreasing on [0, {SUBORDINATOR_HORIZON:.0e}] "
            f"(sigma2={t.sigma2}, effective drift={effective_drift(t):.6g}); paths never move down"
        )
    return TripletDiagnostics(passed=not reasons, reasons=tuple(reasons))


def require_valid(t: LevyTriplet) -> LevyTriplet:
    """Return ``t`` unchanged or raise ValidationError with the diagnostics."""
    diagnostics = validate_triplet(t)
    if not diagnostics.passed:
        raise ValidationError("; ".join(diagnostics.reasons))
    return t
