"""
Scale functions of continuous-state branching processes.

With ``z0 = ψ⁻¹(p)`` and ``g = ψ - p`` all integrals run over ``z > z0`` after the
substitution ``z = z0 + e^u``, which turns the singular lower end into a smooth
left tail. The kernel tabulates

    C(u) = ∫_{u_lo}^u w,   w(u) = e^u / g(z0 + e^u),

once per triplet on Gauss–Legendre panels, so that both the recurrent anchor
``∫_θ^z 1/g`` and the extinct tail ``∫_z^∞ 1/g`` are exact panel sums plus one
local panel. The outer integrals go through ``scipy.integrate.quad_vec`` with
Gauss–Kronrod 15 rules, vectorised over the states.
"""
import enum
import logging
import math
import threading
from typing import Dict, Sequence, Tuple

import numpy as np
from scipy.integrate import quad_vec

from passage_kit.exceptions import DegenerateSpecError, DomainError, NonConvergenceError
from passage_kit.exponent import (
    LevyTriplet,
    effective_drift,
    eval_psi_increment,
    eval_psi_prime,
    eval_psi_second,
    psi_inverse,
    psi_prime_at_zero,
)
from passage_kit.scale.types import Csbp, CsbpVariant, ScaleEval

logger = logging.getLogger(__name__)

U_LO = -45.0
U_HI = 40.0
PANEL_STEP = 0.05
GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(8)
QUAD_EPSREL = 1e-11
QUAD_EPSABS = 1e-14
# integrand cut relative to its maximum
NEGLIGIBLE = math.log(1e-20)
SERIES_EPS = 1e-6
# decades of z - z0 inspected by the tail test, and the fall across them that
# counts as a convergent tail
TAIL_DECADES = range(3, 9)
TAIL_DECAY = 1e-2


class CsbpForm(str, enum.Enum):
    """Which display of the recurrent transform to integrate."""
    FIRST = "first"
    SECOND = "second"


def classify_tail(increments: Sequence[float], decay: float = TAIL_DECAY) -> CsbpVariant:
    """
    Variant from successive decade increments of ``∫ 1/(ψ - p)``.

    Linear growth keeps the increments at ``log(10)/b`` and the integral
    diverges; a tail that falls by ``decay`` or more over the inspected decades
    is taken as convergent, so 0 is reachable.
    """
    increments = np.asarray(increments, dtype=float)
    if increments.size < 2 or not np.all(np.isfinite(increments)) or np.any(increments <= 0):
        raise DegenerateSpecError(f"decade increments must be positive and finite, got {increments.tolist()}")
    converging = bool(np.all(np.diff(increments) < 0)) and increments[-1] <= decay * increments[0]
    return CsbpVariant.EXTINCT if converging else CsbpVariant.RECURRENT


def csbp_variant(t: LevyTriplet) -> CsbpVariant:
    """
    Classify by the tail of ``∫^∞ 1/ψ``.

    A Gaussian part makes ψ grow quadratically, so ``σ² > 0`` is extinct
    without looking further. Otherwise the decade increments of the shared
    kernel decide.
    """
    if t.sigma2 > 0:
        return CsbpVariant.EXTINCT
    return get_kernel(t).variant


def tail_decade_increments(t: LevyTriplet, decades: Sequence[int] = TAIL_DECADES) -> np.ndarray:
    """
    ``∫ 1/(ψ - p)`` over ``z - z0 ∈ [10^k, 10^{k+1}]`` for each ``k``.

    The increments settle at ``log(10)/b`` for linear growth ``b z`` and shrink
    tenfold per decade for quadratic growth.
    """
    return get_kernel(t).decade_increments(decades)


class CsbpKernel:
    """
    Tabulated ``∫ 1/(ψ - p)`` on a uniform grid in ``u = log(z - z0)``.

    Instances are immutable after construction and shared across threads.
    """

    def __init__(self, triplet: LevyTriplet, step: float = PANEL_STEP, u_lo: float = U_LO, u_hi: float = U_HI):
        self.triplet = triplet
        self.z0 = psi_inverse(triplet, triplet.p).z
        slope = psi_prime_at_zero(triplet) if self.z0 == 0 else eval_psi_prime(triplet, self.z0)
        self._g1 = max(float(slope), 0.0)
        self._g2 = float(eval_psi_second(triplet, self.z0))
        self._series_eps = SERIES_EPS * max(1.0, self.z0)

        n_panels = int(round((u_hi - u_lo) / step))
        self.step = (u_hi - u_lo) / n_panels
        self.edges = u_lo + self.step * np.arange(n_panels + 1)
        panels = self._panel_integrals(self.edges[:-1], self.edges[1:])
        self.cumulative = np.concatenate([[0.0], np.cumsum(panels)])
        self.increments = self.decade_increments()
        self.variant = CsbpVariant.EXTINCT if triplet.sigma2 > 0 else classify_tail(self.increments)
        if self.variant is CsbpVariant.EXTINCT:
            remainder = self._tail_beyond_grid(panels)
            self.tail = np.concatenate([np.cumsum(panels[::-1])[::-1], [0.0]]) + remainder
        else:
            self.tail = None
        logger.debug(
            f"CSBP kernel built: z0={self.z0:.12g}, {n_panels} panels of {self.step:.4f}, "
            f"variant={self.variant.value}"
        )

    def decade_increments(self, decades: Sequence[int] = TAIL_DECADES) -> np.ndarray:
        """``∫ 1/(ψ - p)`` over ``z - z0 ∈ [10^k, 10^{k+1}]``, read off the panels."""
        k = np.asarray(list(decades), dtype=float)
        return self.cumulative_at((k + 1.0) * math.log(10.0)) - self.cumulative_at(k * math.log(10.0))

    def _tail_beyond_grid(self, panels: np.ndarray) -> float:
        """``∫ 1/(ψ - p)`` past ``z0 + e^{u_hi}``."""
        big_z = self.z0 + math.exp(self.edges[-1])
        if self.triplet.sigma2 > 0:
            return 2.0 / (self.triplet.sigma2 * big_z)
        # geometric continuation of the last two decades on the grid
        per_decade = int(round(math.log(10.0) / self.step))
        last = float(np.sum(panels[-per_decade:]))
        ratio = last / float(np.sum(panels[-2 * per_decade:-per_decade]))
        if not 0 < ratio < 1:
            raise NonConvergenceError(f"tail of 1/(psi - p) does not shrink past z = {big_z:.3g} (ratio {ratio:.3g})")
        return last * ratio / (1.0 - ratio)

    def g(self, eps: np.ndarray) -> np.ndarray:
        """``ψ(z0 + eps) - p``, switching to the local Taylor form very close to z0."""
        exact = np.asarray(eval_psi_increment(self.triplet, self.z0, eps), dtype=float)
        taylor = self._g1 * eps + 0.5 * self._g2 * eps * eps
        return np.where(eps < self._series_eps, taylor, exact)

    def weight(self, u: np.ndarray) -> np.ndarray:
        eps = np.exp(np.asarray(u, dtype=float))
        return eps / self.g(eps)

    def _panel_integrals(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        half = 0.5 * (b - a)
        nodes = a[..., None] + half[..., None] * (GL_NODES + 1.0)
        return half * (self.weight(nodes) @ GL_WEIGHTS)

    def _locate(self, u: np.ndarray) -> np.ndarray:
        idx = np.floor((u - self.edges[0]) / self.step).astype(int)
        return np.clip(idx, 0, len(self.edges) - 2)

    def cumulative_at(self, u: np.ndarray) -> np.ndarray:
        """``C(u)``; exact to quadrature precision anywhere inside the grid."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        idx = self._locate(u)
        return self.cumulative[idx] + self._panel_integrals(self.edges[idx], u)

    def tail_at(self, u: np.ndarray) -> np.ndarray:
        """``∫_{z0+e^u}^∞ 1/(ψ - p)``; only defined when that integral converges."""
        if self.tail is None:
            raise DegenerateSpecError("tail integral of 1/(psi - p) diverges for this triplet")
        u = np.atleast_1d(np.asarray(u, dtype=float))
        idx = self._locate(u)
        return self.tail[idx] - self._panel_integrals(self.edges[idx], u)

    def log_phi(self, q: float, xs: np.ndarray, form: str, theta: float = math.nan) -> Tuple[np.ndarray, np.ndarray, int]:
        """
        ``log Φ_q`` at every state in ``xs`` for ``q > 0``.

        ``form`` is ``"second"`` (``x ∫ exp(-xz + qH)``), ``"first"``
        (``∫ exp(-xz + qH)/g``) or ``"extinct"`` (``∫ exp(-xz - qT)/g``), where H
        is anchored at ``theta`` and T is the tail integral.

        Returns:
            Tuple of log values, relative error bounds and integrand evaluations
        """
        xs = np.asarray(xs, dtype=float)
        log_values = np.empty_like(xs)
        rel_errors = np.zeros_like(xs)
        if form == "extinct":
            at_zero = xs == 0
            log_values[at_zero] = -math.log(q)
            active = ~at_zero
        else:
            active = np.ones_like(xs, dtype=bool)
        if not np.any(active):
            return log_values, rel_errors, 0
        xa = xs[active]

        anchor = float(self.cumulative_at(math.log(theta - self.z0))[0]) if form != "extinct" else 0.0

        def inner(u: np.ndarray, cum: np.ndarray) -> np.ndarray:
            return -q * cum if form == "extinct" else q * (cum - anchor)

        def log_integrand(u: np.ndarray, cum: np.ndarray, w: np.ndarray) -> np.ndarray:
            base = inner(u, cum)[:, None] - np.exp(u)[:, None] * xa[None, :]
            if form == "second":
                return base + u[:, None] + np.log(xa)[None, :]
            return base + np.log(w)[:, None]

        grid_cum = self.tail if form == "extinct" else self.cumulative
        grid_w = self.weight(self.edges)
        grid_log = log_integrand(self.edges, grid_cum, grid_w)
        peak_log = grid_log.max(axis=0)
        peak_u = self.edges[grid_log.argmax(axis=0)]
        significant = grid_log - peak_log[None, :] > NEGLIGIBLE
        if significant[-1].any():
            small = float(xa[significant[-1]].min())
            raise NonConvergenceError(
                f"CSBP {form} integrand is still significant at z - z0 = e^{self.edges[-1]:.0f}; "
                f"state x={small:.3g} is too small for the kernel grid (q={q})"
            )
        rows = np.nonzero(significant.any(axis=1))[0]
        i_lo = max(int(rows[0]) - 1, 0)
        i_hi = min(int(rows[-1]) + 1, len(self.edges) - 1)
        u_a, u_b = float(self.edges[i_lo]), float(self.edges[i_hi])
        points = sorted({float(p) for p in peak_u if u_a < p < u_b})

        def integrand(u: float) -> np.ndarray:
            uu = np.array([u])
            cum = self.tail_at(uu) if form == "extinct" else self.cumulative_at(uu)
            w = self.weight(uu)
            return np.exp(log_integrand(uu, cum, w)[0] - peak_log)

        result, error, info = quad_vec(
            integrand,
            u_a,
            u_b,
            epsabs=QUAD_EPSABS,
            epsrel=QUAD_EPSREL,
            norm="max",
            quadrature="gk15",
            points=points or None,
            full_output=True,
        )
        if not info.success:
            raise NonConvergenceError(
                f"CSBP quadrature ({form}) failed for q={q}: {info.message}",
                best=result,
            )
        log_int = peak_log + np.log(result)
        if i_lo == 0 and form != "second":
            # left tail below the grid: ∫ w e^{inner} = e^{inner(u_lo)}/q
            log_int = np.logaddexp(log_int, inner(self.edges[:1], grid_cum[:1])[0] - math.log(q))
        log_values[active] = log_int - xa * self.z0
        rel_errors[active] = error / result + 1e-20
        logger.debug(
            f"CSBP {form} quadrature q={q:.6g} on u in [{u_a:.2f}, {u_b:.2f}]: "
            f"{info.neval} evaluations, max rel error {float(np.max(rel_errors)):.2e}"
        )
        return log_values, rel_errors, int(info.neval)


_KERNELS: Dict[LevyTriplet, CsbpKernel] = {}
_KERNEL_LOCK = threading.Lock()


def get_kernel(t: LevyTriplet) -> CsbpKernel:
    """Shared kernel for ``t``, built once under a lock."""
    kernel = _KERNELS.get(t)
    if kernel is None:
        with _KERNEL_LOCK:
            kernel = _KERNELS.get(t)
            if kernel is None:
                kernel = CsbpKernel(t)
                _KERNELS[t] = kernel
    return kernel


def _check_variant(spec: Csbp, expected: CsbpVariant) -> None:
    if spec.variant is not expected:
        raise DegenerateSpecError(f"spec variant is {spec.variant.value}, operation needs {expected.value}")
    actual = csbp_variant(spec.triplet)
    if actual is not expected:
        raise DegenerateSpecError(
            f"variant mismatch: triplet with sigma2={spec.triplet.sigma2} and effective drift "
            f"{effective_drift(spec.triplet):.6g} is {actual.value}, spec says {expected.value}"
        )


def csbp_log_phi(spec: Csbp, q: float, xs: Sequence[float], form: CsbpForm = CsbpForm.SECOND) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    ``log Φ_q`` of a CSBP spec at several states, with relative error bounds.

    At ``q = 0`` both variants use the second display, ``Φ_0(x) = e^{-z0 x}``.
    """
    xs = np.asarray(xs, dtype=float)
    for x in xs:
        spec.check_state(float(x))
    if q < 0:
        raise DomainError(f"q must be >= 0, got {q}")
    _check_variant(spec, spec.variant)
    z0 = spec.z0
    if q == 0:
        if spec.variant is CsbpVariant.RECURRENT and CsbpForm(form) is CsbpForm.FIRST:
            raise DomainError("the first recurrent display is only defined for q > 0")
        return -z0 * xs, np.zeros_like(xs), 0
    kernel = get_kernel(spec.triplet)
    if spec.variant is CsbpVariant.EXTINCT:
        return kernel.log_phi(q, xs, "extinct")
    return kernel.log_phi(q, xs, CsbpForm(form).value, theta=spec.theta)


def scale_csbp_recurrent(spec: Csbp, q: float, x: float, form: CsbpForm = CsbpForm.SECOND) -> ScaleEval:
    """
    Φ_q(x) of a CSBP that never reaches 0.

    The default SECOND display is ``x ∫_{z0}^∞ exp(-xz + ∫_θ^z q/(ψ-p)) dz`` and
    also holds at ``q = 0``; the FIRST display weights by ``1/(ψ - p)`` instead of
    ``x`` and needs ``q > 0``. The two differ by the constant factor ``q``.

    Raises:
        DegenerateSpecError: If the spec or its triplet is not recurrent
        DomainError: If ``x <= 0`` or ``q < 0``
        NonConvergenceError: If the quadrature fails
    """
    _check_variant(spec, CsbpVariant.RECURRENT)
    logs, errs, nodes = csbp_log_phi(spec, q, [x], form)
    return ScaleEval.from_log(float(logs[0]), rel_error=float(errs[0]), terms_or_nodes=nodes)


def scale_csbp_extinct(spec: Csbp, q: float, x: float) -> ScaleEval:
    """
    Φ_q(x) of a CSBP absorbed at 0: ``∫_{z0}^∞ exp(-xz - ∫_z^∞ q/(ψ-p)) dz/(ψ(z)-p)``.

    ``Φ_q(0) = 1/q`` exactly. For ``q = 0`` use the recurrent second display through
    ``first_passage_transform``.

    Raises:
        DegenerateSpecError: If the spec or its triplet is not extinct
        DomainError: If ``q <= 0`` or ``x < 0``
    """
    _check_variant(spec, CsbpVariant.EXTINCT)
    if not q > 0:
        raise DomainError(f"scale_csbp_extinct needs q > 0, got {q}")
    logs, errs, nodes = csbp_log_phi(spec, q, [x])
    return ScaleEval.from_log(float(logs[0]), rel_error=float(errs[0]), terms_or_nodes=nodes)
