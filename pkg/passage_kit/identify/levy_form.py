"""
Exponential-in-gap structure of Lévy transform data.

For a Lévy process ``-log E_x[e^{-qT_l}; T_l < ζ] = φ(q)(x - l)`` with
``φ = ψ^{-1}(p + q)``; these routines recover φ per q and test whether data has
this structure at all.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Tuple

import numpy as np

from passage_kit.exceptions import IdentificationError, ValidationError
from passage_kit.identify.grid import TransformGrid, gap_arrays

logger = logging.getLogger(__name__)

LEVY_FORM_TOLERANCE = 1e-8
AFFINE_R2 = 1.0 - 1e-6
# deviations are relative to -log(value) floored here
MIN_TARGET = 1e-300


@dataclass(frozen=True)
class PhiGrid:
    """Fitted exponent slope ``φ(q)`` per q, positive and nondecreasing."""
    qs: Tuple[float, ...]
    phis: Tuple[float, ...]

    def __post_init__(self):
        if len(self.qs) != len(self.phis):
            raise ValidationError("PhiGrid needs one phi per q")
        if any(p <= 0 for p in self.phis):
            raise ValidationError("PhiGrid values must be positive")
        if any(b < a for a, b in zip(self.phis, self.phis[1:])):
            raise ValidationError("PhiGrid values must be nondecreasing in q")

    def __len__(self) -> int:
        return len(self.qs)

    def arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.qs, dtype=float), np.asarray(self.phis, dtype=float)


@dataclass(frozen=True)
class PhiDiagnostic:
    q: float
    n_gaps: int
    r_squared: float
    low_confidence: bool
    affine: bool
    excluded: bool = False


@dataclass(frozen=True)
class PhiFit:
    grid: PhiGrid
    diagnostics: Tuple[PhiDiagnostic, ...]
    monotone_adjusted: int = 0

    @property
    def flagged(self) -> List[float]:
        """q values the fit excluded or cannot fully trust."""
        return [d.q for d in self.diagnostics if d.excluded or d.low_confidence or not d.affine]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "q": list(self.grid.qs),
            "phi": list(self.grid.phis),
            "diagnostics": [d.__dict__.copy() for d in self.diagnostics],
            "monotone_adjusted": self.monotone_adjusted,
        }


def _zero_intercept(gaps: np.ndarray, targets: np.ndarray) -> Tuple[float, float]:
    """Least-squares slope through the origin and the centred R² of that fit."""
    slope = float(gaps @ targets / (gaps @ gaps))
    ss_res = float(np.sum((targets - slope * gaps) ** 2))
    ss_tot = float(np.sum((targets - targets.mean()) ** 2))
    if ss_tot == 0:
        r_squared = 1.0 if ss_res <= 1e-30 * max(float(targets @ targets), 1e-300) else 0.0
    else:
        r_squared = 1.0 - ss_res / ss_tot
    return slope, r_squared


def fit_phi_grid(data: TransformGrid) -> PhiFit:
    """
    Fit ``φ(q)`` as the slope of ``-log(value)`` against ``x - l`` through the origin.

    Rows with ``x = l`` carry no information and are ignored. A q with a single
    distinct gap still yields a slope but is flagged ``low_confidence``; a q whose
    zero-intercept fit has ``R² < 1 - 1e-6`` is flagged non-affine. A q whose slope
    is not positive (``q = 0`` rows of a recurrent process give ``φ = 0``) is
    excluded and reported in the diagnostics. Slopes are made nondecreasing by a
    running maximum.

    Raises:
        IdentificationError: If no q is left with a positive gap and a positive slope
    """
    groups = data.by_q()
    qs, raw, diags = [], [], []
    for q, entries in groups.items():
        gaps, targets = gap_arrays(entries)
        if gaps.size == 0:
            logger.warning(f"q={q}: no rows with x > l, skipped")
            continue
        slope, r_squared = _zero_intercept(gaps, targets)
        n_gaps = len(set(gaps.tolist()))
        excluded = not slope > 0
        diags.append(
            PhiDiagnostic(
                q=q, n_gaps=n_gaps, r_squared=r_squared, low_confidence=n_gaps < 2,
                affine=r_squared >= AFFINE_R2, excluded=excluded,
            )
        )
        if excluded:
            logger.warning(f"q={q}: fitted slope {slope:.3e} is not positive, excluded", extra={"q": q, "slope": slope})
            continue
        qs.append(q)
        raw.append(slope)
    if not qs:
        raise IdentificationError("no q value has rows with x > l and a positive slope")

    phis = np.maximum.accumulate(np.asarray(raw))
    adjusted = int(np.sum(phis > np.asarray(raw)))
    if adjusted:
        logger.warning(f"Raised {adjusted} phi values to keep phi nondecreasing in q")
    flagged = [d.q for d in diags if d.excluded or d.low_confidence or not d.affine]
    logger.info(f"Fitted phi on {len(qs)} q values, {len(flagged)} flagged")
    return PhiFit(
        grid=PhiGrid(qs=tuple(qs), phis=tuple(float(p) for p in phis)),
        diagnostics=tuple(diags),
        monotone_adjusted=adjusted,
    )


@dataclass(frozen=True)
class LevyFormResult:
    is_levy: bool
    score: float
    degenerate: bool
    n_q: int
    n_gaps: int

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def detect_levy_form(data: TransformGrid, tolerance: float = LEVY_FORM_TOLERANCE) -> LevyFormResult:
    """
    Decide whether ``-log(value)`` is proportional to the gap for every q.

    The score is the worst relative deviation of any point from its per-q
    zero-intercept fit. Fewer than three q values or three gaps make the answer
    vacuous; it is still computed and ``degenerate`` is set.
    """
    score = 0.0
    all_gaps = set()
    n_q = 0
    for q, entries in data.by_q().items():
        gaps, targets = gap_arrays(entries)
        if gaps.size == 0:
            continue
        n_q += 1
        all_gaps.update(gaps.tolist())
        slope = float(gaps @ targets / (gaps @ gaps))
        deviation = np.abs(targets - slope * gaps) / np.maximum(np.abs(targets), MIN_TARGET)
        score = max(score, float(deviation.max()))
    degenerate = n_q < 3 or len(all_gaps) < 3
    is_levy = score <= tolerance
    logger.info(
        f"Levy form test: score {score:.3e} over {n_q} q values and {len(all_gaps)} gaps -> "
        f"{'levy' if is_levy else 'not levy'}{' (degenerate grid)' if degenerate else ''}"
    )
    return LevyFormResult(is_levy=is_levy, score=score, degenerate=degenerate, n_q=n_q, n_gaps=len(all_gaps))
