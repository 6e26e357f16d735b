"""
Process families and scale-function results.

A ``ProcessSpec`` is one of four immutable families, each carrying the
parameters its closed form needs:

* ``Levy``: a spectrally positive Lévy process killed at rate ``p``;
* ``Pssmp``: the logarithm of a positive self-similar Markov process with index
  ``alpha``, driven by a Lévy process through the Lamperti clock;
* ``Csbp``: a continuous-state branching process with mechanism ``ψ - p``;
* ``KilledDrift``: a deterministic downward drift with position-dependent killing.
"""
import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from passage_kit.exceptions import DomainError, ValidationError
from passage_kit.exponent import LevyTriplet, psi_inverse, require_valid

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScaleEval:
    """
    One value of an (unnormalised) scale function Φ_q.

    Attributes:
        value: Φ_q(x), may under- or overflow for extreme arguments
        log_value: log Φ_q(x), always finite on success
        abs_error_bound: Bound on the truncation or quadrature error of ``value``
        terms_or_nodes: Series terms or integrand evaluations used
    """
    value: float
    log_value: float
    abs_error_bound: float = 0.0
    terms_or_nodes: int = 0

    @classmethod
    def from_log(cls, log_value: float, rel_error: float = 0.0, terms_or_nodes: int = 0) -> "ScaleEval":
        value = math.exp(log_value) if log_value < 709.0 else math.inf
        return cls(
            value=value,
            log_value=log_value,
            abs_error_bound=abs(rel_error) * value,
            terms_or_nodes=terms_or_nodes,
        )

    @property
    def rel_error(self) -> float:
        return self.abs_error_bound / self.value if self.value > 0 and math.isfinite(self.value) else 0.0


def _triplet(data: Any) -> LevyTriplet:
    if isinstance(data, LevyTriplet):
        return data
    return LevyTriplet.from_dict(data)


@dataclass(frozen=True)
class Levy:
    """Spectrally positive Lévy process; state space ℝ."""
    triplet: LevyTriplet
    family = "levy"

    def __post_init__(self):
        object.__setattr__(self, "triplet", require_valid(_triplet(self.triplet)))

    def check_state(self, x: float) -> None:
        if not math.isfinite(x):
            raise DomainError(f"levy state must be finite, got {x}")

    def to_dict(self) -> Dict[str, Any]:
        return {"family": self.family, "triplet": self.triplet.to_dict()}


@dataclass(frozen=True)
class Pssmp:
    """Logarithm of a pssMp with self-similarity index ``alpha``; state space ℝ."""
    triplet: LevyTriplet
    alpha: float
    family = "pssmp"

    def __post_init__(self):
        object.__setattr__(self, "triplet", require_valid(_triplet(self.triplet)))
        alpha = float(self.alpha)
        if not (math.isfinite(alpha) and alpha > 0):
            raise ValidationError(f"alpha must be > 0, got {self.alpha}")
        object.__setattr__(self, "alpha", alpha)

    def check_state(self, x: float) -> None:
        if not math.isfinite(x):
            raise DomainError(f"pssmp state must be finite, got {x}")

    def to_dict(self) -> Dict[str, Any]:
        return {"family": self.family, "triplet": self.triplet.to_dict(), "alpha": self.alpha}


class CsbpVariant(str, enum.Enum):
    """Whether 0 is excluded (RECURRENT) or absorbing and reachable (EXTINCT)."""
    RECURRENT = "recurrent"
    EXTINCT = "extinct"


@dataclass(frozen=True)
class Csbp:
    """
    Continuous-state branching process with branching mechanism ``ψ - p``.

    ``theta`` is the free reference point of the recurrent display; it must lie
    above ``ψ⁻¹(p)`` and defaults to ``ψ⁻¹(p) + 1``.
    """
    triplet: LevyTriplet
    variant: CsbpVariant
    theta: Optional[float] = None
    family = "csbp"

    def __post_init__(self):
        object.__setattr__(self, "triplet", require_valid(_triplet(self.triplet)))
        try:
            object.__setattr__(self, "variant", CsbpVariant(self.variant))
        except ValueError as e:
            raise ValidationError(f"unknown CSBP variant {self.variant!r}") from e
        z0 = psi_inverse(self.triplet, self.triplet.p).z
        if self.theta is None:
            object.__setattr__(self, "theta", z0 + 1.0)
        theta = float(self.theta)
        if not math.isfinite(theta) or theta <= z0:
            raise ValidationError(f"theta must exceed psi^-1(p) = {z0:.12g}, got {self.theta}")
        object.__setattr__(self, "theta", theta)

    @property
    def z0(self) -> float:
        return psi_inverse(self.triplet, self.triplet.p).z

    def check_state(self, x: float) -> None:
        low_ok = x >= 0 if self.variant is CsbpVariant.EXTINCT else x > 0
        if not (math.isfinite(x) and low_ok):
            bound = "[0, inf)" if self.variant is CsbpVariant.EXTINCT else "(0, inf)"
            raise DomainError(f"csbp ({self.variant.value}) state must lie in {bound}, got {x}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "family": self.family,
            "triplet": self.triplet.to_dict(),
            "variant": self.variant.value,
            "theta": self.theta,
        }


@dataclass(frozen=True)
class PowerLaw:
    """
    ``coefficient * (y - shift) ** exponent``.

    With ``exponent == 0`` the law is the constant ``coefficient`` on all of ℝ.
    """
    coefficient: float
    exponent: float = 0.0

    def __post_init__(self):
        for name in ("coefficient", "exponent"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValidationError(f"power law {name} must be finite")
            object.__setattr__(self, name, value)
        if self.exponent < 0:
            raise ValidationError(f"power law exponent must be >= 0, got {self.exponent}")

    def __call__(self, s: float) -> float:
        return self.coefficient if self.exponent == 0 else self.coefficient * s ** self.exponent


def _power_integral(a: float, b: float, e: float) -> float:
    """∫_a^b s^e ds for a, b > 0 (any a, b when e == 0)."""
    if e == 0:
        return b - a
    if e == -1:
        return math.log(b / a)
    return (b ** (e + 1) - a ** (e + 1)) / (e + 1)


@dataclass(frozen=True)
class KilledDrift:
    """
    Deterministic downward drift with speed ``v`` and killing rate ``omega``.

    Both laws are powers of the distance to ``shift``: ``v(y) = c (y - y0)^β`` and
    ``omega(y) = r (y - y0)^κ``. A constant speed (β = 0) lives on ℝ and then
    requires constant killing; otherwise the state space is ``(y0, inf)`` and
    β >= 1 so that the lower end is never reached in finite time.
    """
    speed: PowerLaw
    killing: PowerLaw = field(default_factory=lambda: PowerLaw(0.0))
    shift: float = 0.0
    theta: Optional[float] = None
    family = "killed_drift"

    def __post_init__(self):
        if isinstance(self.speed, Mapping):
            object.__setattr__(self, "speed", PowerLaw(**self.speed))
        if isinstance(self.killing, Mapping):
            object.__setattr__(self, "killing", PowerLaw(**self.killing))
        object.__setattr__(self, "shift", float(self.shift))
        if self.speed.coefficient <= 0:
            raise ValidationError(f"speed coefficient must be > 0, got {self.speed.coefficient}")
        if self.killing.coefficient < 0:
            raise ValidationError(f"killing rate must be >= 0, got {self.killing.coefficient}")
        beta = self.speed.exponent
        if 0 < beta < 1:
            raise ValidationError(
                f"speed exponent {beta} in (0, 1) reaches the lower end in finite time; use 0 or >= 1"
            )
        if beta == 0 and self.killing.exponent != 0:
            raise ValidationError("a constant speed on the whole line needs a constant killing rate")
        if self.theta is None:
            object.__setattr__(self, "theta", 0.0 if self.on_real_line else self.shift + 1.0)
        object.__setattr__(self, "theta", float(self.theta))
        self.check_state(self.theta)

    @property
    def on_real_line(self) -> bool:
        return self.speed.exponent == 0

    def check_state(self, x: float) -> None:
        if not math.isfinite(x) or (not self.on_real_line and x <= self.shift):
            interval = "R" if self.on_real_line else f"({self.shift}, inf)"
            raise DomainError(f"killed-drift state must lie in {interval}, got {x}")

    def _s(self, y: float) -> float:
        return y - self.shift

    def speed_at(self, y: float) -> float:
        return self.speed(self._s(y))

    def killing_at(self, y: float) -> float:
        return self.killing(self._s(y))

    def travel_time(self, lo: float, hi: float) -> float:
        """``V(hi) - V(lo)``, the time to drift from ``hi`` down to ``lo``."""
        c, beta = self.speed.coefficient, self.speed.exponent
        if beta == 0:
            return (hi - lo) / c
        return _power_integral(self._s(lo), self._s(hi), -beta) / c

    def killing_integral(self, lo: float, hi: float) -> float:
        """``∫_lo^hi omega / v``, the accumulated hazard of the trip from ``hi`` to ``lo``."""
        r = self.killing.coefficient
        if r == 0:
            return 0.0
        c = self.speed.coefficient
        if self.on_real_line:
            return r * (hi - lo) / c
        return r / c * _power_integral(self._s(lo), self._s(hi), self.killing.exponent - self.speed.exponent)

    def position_after(self, x: float, elapsed: float) -> float:
        """``V⁻¹(V(x) - elapsed)``."""
        c, beta = self.speed.coefficient, self.speed.exponent
        if beta == 0:
            return x - c * elapsed
        s = self._s(x)
        if beta == 1:
            return self.shift + s * math.exp(-c * elapsed)
        base = s ** (1.0 - beta) - c * (1.0 - beta) * elapsed
        return self.shift + base ** (1.0 / (1.0 - beta))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "family": self.family,
            "speed": {"coefficient": self.speed.coefficient, "exponent": self.speed.exponent},
            "killing": {"coefficient": self.killing.coefficient, "exponent": self.killing.exponent},
            "shift": self.shift,
            "theta": self.theta,
        }


ProcessSpec = Union[Levy, Pssmp, Csbp, KilledDrift]

FAMILIES: Tuple[str, ...] = (Levy.family, Pssmp.family, Csbp.family, KilledDrift.family)


def process_spec_from_dict(data: Mapping[str, Any]) -> ProcessSpec:
    """
    Build a ProcessSpec from its JSON form.

    Raises:
        ValidationError: On an unknown family or invalid parameters
    """
    if not isinstance(data, Mapping):
        raise ValidationError(f"process spec must be an object, got {type(data).__name__}")
    family = data.get("family")
    try:
        if family == Levy.family:
            return Levy(LevyTriplet.from_dict(data["triplet"]))
        if family == Pssmp.family:
            return Pssmp(LevyTriplet.from_dict(data["triplet"]), data["alpha"])
        if family == Csbp.family:
            return Csbp(LevyTriplet.from_dict(data["triplet"]), data["variant"], data.get("theta"))
        if family == KilledDrift.family:
            return KilledDrift(
                speed=PowerLaw(**data["speed"]),
                killing=PowerLaw(**data.get("killing", {"coefficient": 0.0})),
                shift=data.get("shift", 0.0),
                theta=data.get("theta"),
            )
    except KeyError as e:
        raise ValidationError(f"{family} spec is missing field {e}") from e
    except TypeError as e:
        raise ValidationError(f"malformed {family} spec: {e}") from e
    raise ValidationError(f"unknown process family {family!r}; expected one of {FAMILIES}")
