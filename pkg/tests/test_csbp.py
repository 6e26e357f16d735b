"""
Tests for CSBP scale functions.
"""
import math
from unittest.mock import patch

import numpy as np
import pytest
from scipy.integrate import quad

from passage_kit.exceptions import DegenerateSpecError, DomainError, NonConvergenceError, ValidationError
from passage_kit.exponent import ExpMixture, LevyTriplet
from passage_kit.scale import (
    Csbp,
    CsbpForm,
    CsbpKernel,
    CsbpVariant,
    classify_tail,
    csbp_log_phi,
    csbp_variant,
    first_passage_transform,
    get_kernel,
    scale_csbp_extinct,
    scale_csbp_recurrent,
    tabulate_transforms,
    tail_decade_increments,
)


# ψ(z) = b z - z/(2 + z) with b = 1.5 + ∫_0^1 h m(dh): linear growth, exponential upward jumps
JUMP_MECHANISM = LevyTriplet(gamma=-1.5, jumps=ExpMixture(((1.0, 2.0),)))
JUMP_SLOPE = 2.0 - 1.5 * math.exp(-2.0)
RECURRENT_MECHANISMS = [LevyTriplet(gamma=-1.0, p=0.5), JUMP_MECHANISM]
RECURRENT_IDS = ["killed_linear", "exp_jumps"]


def feller_scale_q1(x: float) -> float:
    """``Φ_1(x) = 2∫ e^{-xz}/(z + 2)² dz`` for the mechanism ``z + z²/2``."""
    value, _ = quad(lambda z: 2.0 * math.exp(-x * z) / (z + 2.0) ** 2, 0.0, math.inf, epsabs=0, epsrel=1e-11)
    return value


@pytest.mark.unit
class TestCsbpVariant:
    """Tests for variant classification and spec validation."""

    def test_classification(self):
        """Test that a Gaussian part is what makes 0 reachable."""
        assert csbp_variant(LevyTriplet(gamma=-1.0)) is CsbpVariant.RECURRENT
        assert csbp_variant(LevyTriplet(gamma=-1.0, sigma2=0.1)) is CsbpVariant.EXTINCT

    def test_jumps_without_gaussian_part_classified_by_tail(self):
        """Test that a σ² = 0 mechanism goes through the decade test of its kernel."""
        kernel = get_kernel(JUMP_MECHANISM)
        np.testing.assert_allclose(kernel.increments, math.log(10.0) / JUMP_SLOPE, rtol=1e-3)
        assert kernel.variant is CsbpVariant.RECURRENT
        assert csbp_variant(JUMP_MECHANISM) is CsbpVariant.RECURRENT

    def test_gaussian_part_skips_kernel(self):
        """Test that σ² > 0 is classified without building a kernel."""
        with patch("passage_kit.scale.csbp.get_kernel") as mock_kernel:
            assert csbp_variant(LevyTriplet(gamma=-0.3, sigma2=0.7)) is CsbpVariant.EXTINCT
        mock_kernel.assert_not_called()

    def test_tail_classifier(self):
        """Test the decade rule on constant, slowly falling and convergent tails."""
        assert classify_tail([0.5, 0.5, 0.5, 0.5]) is CsbpVariant.RECURRENT
        assert classify_tail([1.0, 0.9, 0.8, 0.7]) is CsbpVariant.RECURRENT
        assert classify_tail([1.0, 0.3, 0.09, 0.027, 0.0081]) is CsbpVariant.EXTINCT
        assert classify_tail(10.0 ** -np.arange(6)) is CsbpVariant.EXTINCT

    def test_tail_classifier_rejects_bad_increments(self):
        """Test that too few or nonpositive increments cannot be classified."""
        with pytest.raises(DegenerateSpecError):
            classify_tail([1.0])
        with pytest.raises(DegenerateSpecError):
            classify_tail([1.0, -1.0])

    def test_theta_defaults_above_z0(self, deterministic_csbp):
        """Test that the reference point defaults to ``z0 + 1``."""
        assert deterministic_csbp.z0 == 0.0
        assert deterministic_csbp.theta == 1.0

    def test_theta_below_z0_rejected(self):
        """Test that theta must exceed ``ψ⁻¹(p)``."""
        with pytest.raises(ValidationError, match="theta"):
            Csbp(LevyTriplet(gamma=-1.0, p=1.0), "recurrent", theta=0.5)

    def test_unknown_variant(self):
        """Test that variants are parsed strictly."""
        with pytest.raises(ValidationError, match="variant"):
            Csbp(LevyTriplet(gamma=-1.0), "transient")

    def test_state_space(self, deterministic_csbp, feller_csbp):
        """Test that 0 is a state only of the extinct variant."""
        with pytest.raises(DomainError):
            deterministic_csbp.check_state(0.0)
        feller_csbp.check_state(0.0)

    def test_variant_mismatch(self):
        """Test that a declared variant contradicting the triplet is degenerate."""
        spec = Csbp(LevyTriplet(gamma=-1.0), "extinct")
        with pytest.raises(DegenerateSpecError, match="variant mismatch"):
            first_passage_transform(spec, 1.0, 2.0, 1.0)

    def test_wrong_evaluator(self, feller_csbp):
        """Test that the recurrent evaluator refuses an extinct spec."""
        with pytest.raises(DegenerateSpecError):
            scale_csbp_recurrent(feller_csbp, 1.0, 1.0)


@pytest.mark.unit
class TestRecurrentCsbp:
    """Tests for the recurrent displays."""

    @pytest.mark.parametrize("q", [0.25, 1.0, 3.0])
    def test_deterministic_decay(self, deterministic_csbp, q):
        """Test ``(x/l)^{-q/b}`` for the linear mechanism ``b z`` with b = 1."""
        value = first_passage_transform(deterministic_csbp, q, 2.0, 1.0)
        assert value == pytest.approx(2.0 ** -q, rel=1e-8)

    def test_linear_mechanism_rate(self):
        """Test that a faster decay rate b shortens the passage."""
        spec = Csbp(LevyTriplet(gamma=-2.0), "recurrent")
        assert first_passage_transform(spec, 1.0, 4.0, 1.0) == pytest.approx(0.5, rel=1e-8)

    def test_first_and_second_display_differ_by_q(self, deterministic_csbp):
        """Test that the second display is q times the first."""
        q = 0.5
        first = scale_csbp_recurrent(deterministic_csbp, q, 1.5, CsbpForm.FIRST)
        second = scale_csbp_recurrent(deterministic_csbp, q, 1.5, CsbpForm.SECOND)
        assert second.log_value - first.log_value == pytest.approx(math.log(q), abs=1e-8)

    def test_second_display_gamma_form(self, deterministic_csbp):
        """Test ``Φ_q(x) = Γ(q + 1) θ^{-q} x^{-q}`` for ``ψ(z) = z``."""
        q, x = 0.75, 2.5
        ev = scale_csbp_recurrent(deterministic_csbp, q, x)
        assert ev.log_value == pytest.approx(math.lgamma(q + 1.0) - q * math.log(x), abs=1e-8)
        assert ev.terms_or_nodes > 0

    def test_first_display_undefined_at_q_zero(self, deterministic_csbp):
        """Test that the first display needs q > 0."""
        with pytest.raises(DomainError, match="q > 0"):
            csbp_log_phi(deterministic_csbp, 0.0, [1.0], CsbpForm.FIRST)

    def test_q_zero(self, deterministic_csbp):
        """Test ``Φ_0(x) = e^{-z0 x}``; with z0 = 0 the transform is 1."""
        assert first_passage_transform(deterministic_csbp, 0.0, 3.0, 1.0) == 1.0

    def test_killed_q_zero(self):
        """Test that with killing the q = 0 transform is ``e^{-z0 (x - l)}``."""
        spec = Csbp(LevyTriplet(gamma=-1.0, p=0.5), "recurrent")
        assert first_passage_transform(spec, 0.0, 3.0, 1.0) == pytest.approx(math.exp(-1.0), rel=1e-10)

    def test_tail_increments_linear(self):
        """Test that linear growth gives ``log(10)/b`` per decade."""
        increments = tail_decade_increments(LevyTriplet(gamma=-2.0))
        np.testing.assert_allclose(increments, math.log(10.0) / 2.0, rtol=1e-8)

    def test_small_state_inside_grid(self, deterministic_csbp):
        """Test the gamma form for a start whose integrand peaks near ``z = 2·10⁶``."""
        ev = scale_csbp_recurrent(deterministic_csbp, 1.0, 1e-6)
        assert ev.log_value == pytest.approx(-math.log(1e-6), abs=1e-7)

    def test_state_below_kernel_grid(self, deterministic_csbp):
        """Test that a start too small for the tabulated range fails loudly."""
        with pytest.raises(NonConvergenceError, match="too small"):
            scale_csbp_recurrent(deterministic_csbp, 1.0, 1e-18)
        with pytest.raises(NonConvergenceError, match="too small"):
            first_passage_transform(deterministic_csbp, 1.0, 2.0, 1e-18)


@pytest.mark.unit
class TestCsbpDisplays:
    """Tests that the recurrent transform does not depend on how it is written."""

    @pytest.mark.parametrize("triplet", RECURRENT_MECHANISMS, ids=RECURRENT_IDS)
    def test_displays_agree_on_grid(self, triplet):
        """Test both displays over a 3 x 3 x 3 grid of (q, x, l)."""
        spec = Csbp(triplet, "recurrent")
        xs, ls = (1.5, 2.0, 4.0), (0.25, 0.5, 1.0)
        states = list(ls + xs)
        for q in (0.5, 1.0, 2.0):
            first, _, _ = csbp_log_phi(spec, q, states, CsbpForm.FIRST)
            second, _, _ = csbp_log_phi(spec, q, states, CsbpForm.SECOND)
            log_first = dict(zip(states, first))
            log_second = dict(zip(states, second))
            for x in xs:
                for l in ls:
                    by_first = math.exp(log_first[x] - log_first[l])
                    by_second = math.exp(log_second[x] - log_second[l])
                    assert by_first == pytest.approx(by_second, rel=1e-8), (q, x, l)
                    assert 0.0 < by_second < 1.0

    @pytest.mark.parametrize("triplet", RECURRENT_MECHANISMS, ids=RECURRENT_IDS)
    def test_theta_invariance(self, triplet):
        """Test that the reference point changes Φ_q but not the transform."""
        z0 = Csbp(triplet, "recurrent").z0
        specs = [Csbp(triplet, "recurrent", theta=z0 + offset) for offset in (0.25, 1.0, 5.0)]
        for q, x, l in [(0.5, 2.0, 1.0), (1.0, 4.0, 0.5), (2.0, 1.5, 0.25)]:
            values = [first_passage_transform(spec, q, x, l) for spec in specs]
            assert values[1] == pytest.approx(values[0], rel=1e-9)
            assert values[2] == pytest.approx(values[0], rel=1e-9)
        scales = [scale_csbp_recurrent(spec, 1.0, 2.0).log_value for spec in specs]
        assert scales[0] != pytest.approx(scales[2], abs=1e-3)


@pytest.mark.unit
class TestExtinctCsbp:
    """Tests for the extinct display."""

    def test_value_at_zero(self, feller_csbp):
        """Test ``Φ_q(0) = 1/q`` exactly."""
        assert scale_csbp_extinct(feller_csbp, 4.0, 0.0).value == pytest.approx(0.25, rel=1e-15)

    @pytest.mark.parametrize("x", [0.1, 1.0, 5.0])
    def test_feller_against_quadrature(self, feller_csbp, x):
        """Test the kernel against a direct integral of the Feller mechanism."""
        ev = scale_csbp_extinct(feller_csbp, 1.0, x)
        assert ev.value == pytest.approx(feller_scale_q1(x), rel=1e-8)

    def test_transform_reaching_zero(self, feller_csbp):
        """Test ``E_x[e^{-T_0}] = Φ_1(x)/Φ_1(0)``."""
        value = first_passage_transform(feller_csbp, 1.0, 2.0, 0.0)
        assert value == pytest.approx(feller_scale_q1(2.0), rel=1e-8)

    def test_needs_positive_q(self, feller_csbp):
        """Test that the extinct evaluator rejects q = 0."""
        with pytest.raises(DomainError):
            scale_csbp_extinct(feller_csbp, 0.0, 1.0)

    def test_tail_increments_quadratic(self):
        """Test that quadratic growth shrinks the decade increments tenfold."""
        increments = tail_decade_increments(LevyTriplet(gamma=-1.0, sigma2=1.0))
        np.testing.assert_allclose(increments[:-1] / increments[1:], 10.0, rtol=1e-2)

    def test_tail_undefined_for_recurrent_kernel(self):
        """Test that the tail integral diverges without a Gaussian part."""
        kernel = CsbpKernel(LevyTriplet(gamma=-1.0))
        with pytest.raises(DegenerateSpecError, match="diverges"):
            kernel.tail_at(np.array([0.0]))


@pytest.mark.unit
class TestCsbpGrid:
    """Tests for shared-state tabulation and the kernel cache."""

    def test_tabulate_matches_pairwise(self, feller_csbp):
        """Test that one quadrature per q gives the pairwise values."""
        rows = tabulate_transforms(feller_csbp, [0.5, 2.0], [1.0, 3.0], [0.5, 1.0])
        assert len(rows) == 8
        for r in rows:
            assert r.transform == pytest.approx(first_passage_transform(feller_csbp, r.q, r.x, r.l), rel=1e-9)
            assert 0.0 < r.transform <= 1.0

    def test_monotone_in_start(self, feller_csbp):
        """Test that a higher start takes longer to come down."""
        values = [first_passage_transform(feller_csbp, 1.0, x, 0.5) for x in (0.5, 1.0, 2.0, 4.0)]
        assert values[0] == 1.0
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_kernel_shared(self, feller_csbp):
        """Test that kernels are built once per triplet."""
        assert get_kernel(feller_csbp.triplet) is get_kernel(LevyTriplet(gamma=-1.0, sigma2=1.0))
