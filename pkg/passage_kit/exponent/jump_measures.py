"""
Finite-activity jump measures of spectrally positive Lévy processes.

Each family evaluates its share of the Laplace exponent in closed form,
``J(z) = ∫ (e^{-zh} - 1) m(dh)``, together with its derivatives, the small-jump
compensator ``∫_(0,1] h m(dh)`` and a sampler for jump sizes. The three families
form a tagged union through the ``kind`` class attribute.
"""
import math
from dataclasses import dataclass
from typing import Any, Dict, Mapping, Tuple, Union

import numpy as np

from passage_kit.exceptions import ValidationError

ArrayLike = Union[float, np.ndarray]


def _as_pairs(pairs: Any, name: str) -> Tuple[Tuple[float, float], ...]:
    try:
        out = tuple((float(a), float(b)) for a, b in pairs)
    except (TypeError, ValueError) as e:
        raise ValidationError(f"{name} must be a list of (rate, parameter) pairs: {e}") from e
    for rate, param in out:
        if not (math.isfinite(rate) and math.isfinite(param)) or rate <= 0 or param <= 0:
            raise ValidationError(f"{name} entries must be finite and strictly positive, got ({rate}, {param})")
    return out


@dataclass(frozen=True)
class NoJumps:
    """The zero jump measure."""
    kind = "none"

    @property
    def total_rate(self) -> float:
        return 0.0

    @property
    def small_jump_mean(self) -> float:
        return 0.0

    def laplace_part(self, z: ArrayLike) -> ArrayLike:
        return np.zeros_like(z, dtype=float) if isinstance(z, np.ndarray) else 0.0

    def laplace_prime(self, z: ArrayLike) -> ArrayLike:
        return self.laplace_part(z)

    def laplace_second(self, z: ArrayLike) -> ArrayLike:
        return self.laplace_part(z)

    def increment(self, z0: float, eps: ArrayLike) -> ArrayLike:
        return self.laplace_part(eps)

    def asymptotic_constant(self) -> float:
        return 0.0

    def sample_sizes(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise ValidationError("cannot sample jumps from the zero measure")

    def to_dict(self) -> Dict[str, Any]:
        return {"type": self.kind}


@dataclass(frozen=True)
class ExpMixture:
    """
    Density ``sum_i rate_i * scale_i * exp(-scale_i h)`` on (0, inf).

    ``components`` holds ``(rate, scale)`` pairs: rate in events per unit time,
    scale in inverse space units (mean jump ``1/scale``).
    """
    components: Tuple[Tuple[float, float], ...]
    kind = "exp_mixture"

    def __post_init__(self):
        object.__setattr__(self, "components", _as_pairs(self.components, "ExpMixture.components"))
        if not self.components:
            raise ValidationError("ExpMixture needs at least one component; use NoJumps instead")

    @property
    def _rates(self) -> np.ndarray:
        return np.array([c[0] for c in self.components])

    @property
    def _scales(self) -> np.ndarray:
        return np.array([c[1] for c in self.components])

    @property
    def total_rate(self) -> float:
        return float(sum(c[0] for c in self.components))

    @property
    def small_jump_mean(self) -> float:
        # ∫_0^1 h rho e^{-rho h} dh = (1 - e^{-rho}(1 + rho)) / rho
        total = 0.0
        for rate, rho in self.components:
            total += rate * (-math.expm1(-rho) - rho * math.exp(-rho)) / rho
        return total

    def laplace_part(self, z: ArrayLike) -> ArrayLike:
        zz = np.asarray(z, dtype=float)[..., None]
        out = np.sum(-self._rates * zz / (self._scales + zz), axis=-1)
        return out if isinstance(z, np.ndarray) else float(out)

    def laplace_prime(self, z: ArrayLike) -> ArrayLike:
        zz = np.asarray(z, dtype=float)[..., None]
        out = np.sum(-self._rates * self._scales / (self._scales + zz) ** 2, axis=-1)
        return out if isinstance(z, np.ndarray) else float(out)

    def laplace_second(self, z: ArrayLike) -> ArrayLike:
        zz = np.asarray(z, dtype=float)[..., None]
        out = np.sum(2.0 * self._rates * self._scales / (self._scales + zz) ** 3, axis=-1)
        return out if isinstance(z, np.ndarray) else float(out)

    def increment(self, z0: float, eps: ArrayLike) -> ArrayLike:
        ee = np.asarray(eps, dtype=float)[..., None]
        rho = self._scales
        out = np.sum(-self._rates * rho * ee / ((rho + z0) * (rho + z0 + ee)), axis=-1)
        return out if isinstance(eps, np.ndarray) else float(out)

    def asymptotic_constant(self) -> float:
        return -self.total_rate

    def sample_sizes(self, rng: np.random.Generator, size: int) -> np.ndarray:
        rates = self._rates
        idx = rng.choice(len(rates), size=size, p=rates / rates.sum())
        return rng.exponential(1.0, size=size) / self._scales[idx]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": self.kind,
            "components": [{"rate": r, "scale": s} for r, s in self.components],
        }


@dataclass(frozen=True)
class Atoms:
    """Point masses: ``atoms`` holds ``(rate, size)`` pairs."""
    atoms: Tuple[Tuple[float, float], ...]
    kind = "atoms"

    def __post_init__(self):
        object.__setattr__(self, "atoms", _as_pairs(self.atoms, "Atoms.atoms"))
        if not self.atoms:
            raise ValidationError("Atoms needs at least one atom; use NoJumps instead")

    @property
    def _rates(self) -> np.ndarray:
        return np.array([a[0] for a in self.atoms])

    @property
    def _sizes(self) -> np.ndarray:
        return np.array([a[1] for a in self.atoms])

    @property
    def total_rate(self) -> float:
        return float(sum(a[0] for a in self.atoms))

    @property
    def small_jump_mean(self) -> float:
        # compensator window is (0, 1], closed at 1
        return float(sum(rate * h for rate, h in self.atoms if h <= 1.0))

    def laplace_part(self, z: ArrayLike) -> ArrayLike:
        zz = np.asarray(z, dtype=float)[..., None]
        out = np.sum(self._rates * np.expm1(-zz * self._sizes), axis=-1)
        return out if isinstance(z, np.ndarray) else float(out)

    def laplace_prime(self, z: ArrayLike) -> ArrayLike:
        zz = np.asarray(z, dtype=float)[..., None]
        h = self._sizes
        out = np.sum(-self._rates * h * np.exp(-zz * h), axis=-1)
        return out if isinstance(z, np.ndarray) else float(out)

    def laplace_second(self, z: ArrayLike) -> ArrayLike:
        zz = np.asarray(z, dtype=float)[..., None]
        h = self._sizes
        out = np.sum(self._rates * h * h * np.exp(-zz * h), axis=-1)
        return out if isinstance(z, np.ndarray) else float(out)

    def increment(self, z0: float, eps: ArrayLike) -> ArrayLike:
        ee = np.asarray(eps, dtype=float)[..., None]
        h = self._sizes
        out = np.sum(self._rates * np.exp(-z0 * h) * np.expm1(-ee * h), axis=-1)
        return out if isinstance(eps, np.ndarray) else float(out)

    def asymptotic_constant(self) -> float:
        return -self.total_rate

    def sample_sizes(self, rng: np.random.Generator, size: int) -> np.ndarray:
        rates = self._rates
        idx = rng.choice(len(rates), size=size, p=rates / rates.sum())
        return self._sizes[idx]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": self.kind,
            "atoms": [{"rate": r, "size": h} for r, h in self.atoms],
        }


JumpMeasureSpec = Union[NoJumps, ExpMixture, Atoms]


def jump_measure_from_dict(data: Union[Mapping[str, Any], None]) -> JumpMeasureSpec:
    """Build a jump measure from its tagged JSON form."""
    if data is None:
        return NoJumps()
    if not isinstance(data, Mapping):
        raise ValidationError(f"jumps must be an object, got {type(data).__name__}")
    kind = data.get("type", "none")
    try:
        if kind == NoJumps.kind:
            return NoJumps()
        if kind == ExpMixture.kind:
            return ExpMixture(tuple((c["rate"], c["scale"]) for c in data.get("components", [])))
        if kind == Atoms.kind:
            return Atoms(tuple((a["rate"], a["size"]) for a in data.get("atoms", [])))
    except (KeyError, TypeError) as e:
        raise ValidationError(f"malformed {kind} jump measure: {e}") from e
    raise ValidationError(f"unknown jump measure type: {kind!r}")
