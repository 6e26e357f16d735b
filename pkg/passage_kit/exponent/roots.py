"""
Safeguarded Newton–bisection for monotone brackets.

Every iterate stays inside a bracket ``[lo, hi]`` with ``f(lo) <= 0 < f(hi)``.
A Newton step is taken when it lands strictly inside the bracket and shrinks the
residual fast enough; otherwise the step falls back to bisection.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable

from passage_kit.exceptions import NonConvergenceError

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 200


@dataclass(frozen=True)
class RootResult:
    root: float
    residual: float
    iterations: int


def newton_bisection(
    f: Callable[[float], float],
    fprime: Callable[[float], float],
    lo: float,
    hi: float,
    abs_tol: float,
    max_iterations: int = MAX_ITERATIONS,
) -> RootResult:
    """
    Find a root of an increasing function inside ``[lo, hi]``.

    Args:
        f: Function with ``f(lo) <= 0 < f(hi)``
        fprime: Derivative of ``f``; may return 0 or NaN, which forces bisection
        lo: Lower bracket end
        hi: Upper bracket end
        abs_tol: Stop once ``|f(z)| <= abs_tol``
        max_iterations: Iteration budget

    Returns:
        RootResult with the last iterate, its residual and the iteration count

    Raises:
        NonConvergenceError: If the budget is exhausted with the residual above tolerance
    """
    f_lo = f(lo)
    if f_lo >= 0.0:
        return RootResult(root=lo, residual=abs(f_lo), iterations=0)

    z = 0.5 * (lo + hi)
    fz = f(z)
    for iteration in range(1, max_iterations + 1):
        if abs(fz) <= abs_tol:
            return RootResult(root=z, residual=abs(fz), iterations=iteration)
        if fz < 0.0:
            lo = z
        else:
            hi = z

        if hi - lo <= 4.0 * math.ulp(max(abs(hi), 1e-300)):
            # bracket collapsed to adjacent floats: the better end wins
            f_hi = f(hi)
            best, best_f = (lo, f(lo))
            if abs(f_hi) < abs(best_f):
                best, best_f = hi, f_hi
            logger.debug(f"Bracket collapsed at z={best:.17g} with residual {abs(best_f):.3e}")
            if abs(best_f) <= abs_tol * 16.0:
                return RootResult(root=best, residual=abs(best_f), iterations=iteration)
            raise NonConvergenceError(
                f"root bracket collapsed at {best!r} with residual {abs(best_f):.3e} > {abs_tol:.3e}",
                best=best,
            )

        slope = fprime(z)
        candidate = z - fz / slope if slope and math.isfinite(slope) else math.nan
        newton_step = math.isfinite(candidate) and lo < candidate < hi
        z_next = candidate if newton_step else 0.5 * (lo + hi)
        f_next = f(z_next)
        # a Newton step that barely improves is replaced by bisection
        if newton_step and abs(f_next) > 0.5 * abs(fz):
            mid = 0.5 * (lo + hi)
            f_mid = f(mid)
            if abs(f_mid) < abs(f_next):
                z_next, f_next = mid, f_mid
        z, fz = z_next, f_next

    if abs(fz) <= abs_tol:
        return RootResult(root=z, residual=abs(fz), iterations=max_iterations)
    raise NonConvergenceError(
        f"Newton-bisection did not converge in {max_iterations} iterations (residual {abs(fz):.3e})",
        best=z,
    )
