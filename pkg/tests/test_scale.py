"""
Tests for scale functions and first-passage transforms of the Lévy,
self-similar and killed-drift families.
"""
import math

import numpy as np
import pytest
from scipy.special import i0

from passage_kit.exceptions import DomainError, ValidationError
from passage_kit.exponent import LevyTriplet, psi_inverse
from passage_kit.scale import (
    KilledDrift,
    Levy,
    PowerLaw,
    Pssmp,
    ScaleEval,
    coefficient_condition,
    first_passage_transform,
    first_passage_transform_eval,
    process_spec_from_dict,
    pssmp_coefficients,
    pssmp_moment,
    scale_function,
    scale_killed_drift,
    scale_levy,
    scale_pssmp,
    tabulate_transforms,
)

BM_TRANSFORM = 0.2431167344342142


def bessel_scale(q: float, x: float) -> float:
    """Closed form of the Brownian self-similar series, ``Σ (2q e^{-x})^k / (k!)²``."""
    return float(i0(2.0 * math.sqrt(2.0 * q * math.exp(-x))))


@pytest.mark.unit
class TestScaleEval:
    """Tests for ScaleEval."""

    def test_from_log(self):
        """Test that value and error follow from the log value."""
        ev = ScaleEval.from_log(math.log(2.0), rel_error=1e-10, terms_or_nodes=3)
        assert ev.value == pytest.approx(2.0)
        assert ev.abs_error_bound == pytest.approx(2e-10)
        assert ev.rel_error == pytest.approx(1e-10)

    def test_overflow_keeps_log(self):
        """Test that huge values overflow to inf while the log stays finite."""
        ev = ScaleEval.from_log(800.0)
        assert ev.value == math.inf
        assert ev.log_value == 800.0
        assert ev.rel_error == 0.0


@pytest.mark.unit
class TestLevyScale:
    """Tests for the Lévy family."""

    def test_brownian_transform(self, bm_levy):
        """Test ``E_1[e^{-T_0}] = e^{-√2}`` for standard Brownian motion."""
        assert first_passage_transform(bm_levy, 1.0, 1.0, 0.0) == pytest.approx(BM_TRANSFORM, rel=1e-12)

    def test_translation_invariance(self, jump_levy):
        """Test that only the gap x - l matters."""
        a = first_passage_transform(jump_levy, 0.7, 3.0, 1.0)
        b = first_passage_transform(jump_levy, 0.7, -5.0, -7.0)
        assert a == pytest.approx(b, rel=1e-14)

    def test_scale_value(self, bm_levy):
        """Test ``Φ_q(x) = e^{-√(2q) x}``."""
        ev = scale_levy(bm_levy, 2.0, 0.5)
        assert ev.log_value == pytest.approx(-1.0, rel=1e-12)
        assert ev.abs_error_bound >= 0.0

    def test_killing_shifts_q(self, jump_triplet):
        """Test that killing p acts like an extra p in the Laplace variable."""
        killed = Levy(jump_triplet)
        unkilled = Levy(LevyTriplet(jump_triplet.gamma, jump_triplet.sigma2, jump_triplet.jumps, 0.0))
        assert first_passage_transform(killed, 0.4, 2.0, 0.0) == pytest.approx(
            first_passage_transform(unkilled, 0.5, 2.0, 0.0), rel=1e-10
        )

    def test_q_zero_recurrent(self, bm_levy):
        """Test that an oscillating process reaches every lower level."""
        assert first_passage_transform(bm_levy, 0.0, 5.0, 0.0) == 1.0

    def test_q_zero_drifting_up(self):
        """Test ``P(T < inf) = e^{-2μ/σ² · gap}`` for Brownian motion drifting upward."""
        spec = Levy(LevyTriplet(gamma=1.0, sigma2=1.0))
        assert first_passage_transform(spec, 0.0, 1.5, 0.0) == pytest.approx(math.exp(-3.0), rel=1e-10)

    def test_pure_drift(self):
        """Test that a deterministic downward drift gives ``e^{-q gap / c}``."""
        spec = Levy(LevyTriplet(gamma=-2.0))
        assert first_passage_transform(spec, 3.0, 1.0, 0.0) == pytest.approx(math.exp(-1.5), rel=1e-12)

    def test_decreasing_in_q(self, jump_levy):
        """Test monotonicity in the Laplace variable."""
        values = [first_passage_transform(jump_levy, q, 1.0, 0.0) for q in (0.0, 0.1, 1.0, 10.0)]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_subordinator_rejected(self):
        """Test that a subordinator cannot be wrapped as a Lévy spec."""
        with pytest.raises(ValidationError, match="subordinator"):
            Levy(LevyTriplet(gamma=1.0))


@pytest.mark.unit
class TestTransformDomain:
    """Tests for argument checks shared by all families."""

    def test_level_above_start(self, bm_levy):
        """Test that l > x is rejected."""
        with pytest.raises(DomainError, match="above"):
            first_passage_transform(bm_levy, 1.0, 0.0, 1.0)

    def test_negative_q(self, bm_levy):
        """Test that q < 0 is rejected."""
        with pytest.raises(DomainError):
            first_passage_transform(bm_levy, -1.0, 1.0, 0.0)

    def test_equal_start_and_level(self, jump_levy):
        """Test that x = l gives exactly 1 with no error."""
        tv = first_passage_transform_eval(jump_levy, 3.0, 2.0, 2.0)
        assert tv.transform == 1.0
        assert tv.abs_error_bound == 0.0

    def test_state_outside_space(self):
        """Test that half-line families reject states below their shift."""
        spec = KilledDrift(speed=PowerLaw(1.0, 1.0))
        with pytest.raises(DomainError):
            first_passage_transform(spec, 1.0, 2.0, -1.0)


@pytest.mark.unit
class TestKilledDrift:
    """Tests for the killed deterministic drift."""

    def test_constant_speed_and_killing(self, killed_drift):
        """Test ``e^{-(r + q)(x - l)/c}`` on the real line."""
        value = first_passage_transform(killed_drift, 1.5, 3.0, 1.0)
        assert value == pytest.approx(math.exp(-(0.5 + 1.5) * 2.0), rel=1e-14)

    def test_linear_speed(self):
        """Test ``v(y) = y, ω(y) = r y``: ``e^{-r(x - l)} (l/x)^q``."""
        spec = KilledDrift(speed=PowerLaw(1.0, 1.0), killing=PowerLaw(0.5, 1.0))
        value = first_passage_transform(spec, 1.0, 2.0, 1.0)
        assert value == pytest.approx(math.exp(-0.5) / 2.0, rel=1e-14)

    def test_scale_normalised_at_theta(self, killed_drift):
        """Test that Φ_q(θ) = 1."""
        ev = scale_killed_drift(killed_drift, 2.0, killed_drift.theta)
        assert ev.value == 1.0

    def test_position_after_travel_time(self):
        """Test that V⁻¹ inverts the travel time."""
        spec = KilledDrift(speed=PowerLaw(2.0, 2.0), shift=1.0)
        t = spec.travel_time(1.5, 4.0)
        assert spec.position_after(4.0, t) == pytest.approx(1.5, rel=1e-12)

    def test_sublinear_speed_rejected(self):
        """Test that speeds reaching the lower end in finite time are rejected."""
        with pytest.raises(ValidationError, match="finite time"):
            KilledDrift(speed=PowerLaw(1.0, 0.5))

    def test_constant_speed_needs_constant_killing(self):
        """Test that the real-line case rejects state-dependent killing."""
        with pytest.raises(ValidationError, match="constant killing"):
            KilledDrift(speed=PowerLaw(1.0), killing=PowerLaw(1.0, 1.0))

    def test_nonpositive_speed_rejected(self):
        """Test that the drift must move downward."""
        with pytest.raises(ValidationError, match="speed coefficient"):
            KilledDrift(speed=PowerLaw(0.0))


@pytest.mark.unit
class TestPssmpScale:
    """Tests for the self-similar series."""

    def test_brownian_coefficients(self, pssmp_bm):
        """Test ``a_k = 2^k / (k!)²`` for Brownian driving and index 1."""
        series = pssmp_coefficients(pssmp_bm, 4)
        assert series.z0 == 0.0
        np.testing.assert_allclose(series.coeffs, [1.0, 2.0, 1.0, 2.0 / 9.0, 1.0 / 36.0], rtol=1e-13)
        assert series.coeffs[1] / series.coeffs[0] == pytest.approx(2.0)

    @pytest.mark.parametrize("q,x", [(0.5, 0.0), (1.0, 1.0), (10.0, -1.0), (1e3, 2.0)])
    def test_brownian_series_is_bessel(self, pssmp_bm, q, x):
        """Test the series against ``I_0(2√(2q e^{-x}))``."""
        ev = scale_pssmp(pssmp_bm, q, x)
        assert ev.log_value == pytest.approx(math.log(bessel_scale(q, x)), rel=1e-11)
        assert ev.abs_error_bound <= 1e-12 * ev.value
        assert ev.terms_or_nodes > 1

    def test_transform_ratio(self, pssmp_bm):
        """Test that the transform is the ratio of scale values."""
        expected = bessel_scale(2.0, 1.0) / bessel_scale(2.0, 0.0)
        assert first_passage_transform(pssmp_bm, 2.0, 1.0, 0.0) == pytest.approx(expected, rel=1e-11)

    def test_q_zero(self, pssmp_bm):
        """Test that q = 0 keeps only the leading term ``e^{-z0 x}``."""
        ev = scale_pssmp(pssmp_bm, 0.0, 3.0)
        assert ev.value == 1.0
        assert ev.terms_or_nodes == 1

    def test_q_zero_with_killing(self):
        """Test ``Φ_0(x) = e^{-z0 x}`` with ``z0 = ψ⁻¹(p)``."""
        t = LevyTriplet(gamma=0.0, sigma2=1.0, p=0.5)
        ev = scale_pssmp(Pssmp(t, 2.0), 0.0, 1.5)
        assert ev.log_value == pytest.approx(-1.5 * psi_inverse(t, 0.5).z, rel=1e-12)

    def test_coefficient_condition(self, pssmp_bm):
        """Test the growth check: ``k² a_k / a_{k-1} = 2``."""
        condition = coefficient_condition(pssmp_coefficients(pssmp_bm, 32))
        assert condition.passed
        assert condition.lower == pytest.approx(2.0, rel=1e-12)
        assert condition.k_range == (16, 32)

    def test_coefficient_condition_too_short(self, pssmp_bm):
        """Test that fewer than two coefficients cannot pass."""
        assert not coefficient_condition(pssmp_coefficients(pssmp_bm, 1)).passed

    def test_negative_order(self, pssmp_bm):
        """Test that K must be nonnegative."""
        with pytest.raises(DomainError):
            pssmp_coefficients(pssmp_bm, -1)

    def test_moment_at_time_zero(self, pssmp_bm):
        """Test that at t = 0 the moment is ``e^{-nαx}``."""
        assert pssmp_moment(pssmp_bm, 2, 0.0, 0.5) == pytest.approx(math.exp(-1.0), rel=1e-13)

    def test_moment_order_zero(self, pssmp_bm):
        """Test the trivial moment."""
        assert pssmp_moment(pssmp_bm, 0, 3.0, 1.0) == 1.0

    def test_invalid_alpha(self, bm_triplet):
        """Test that the index must be positive."""
        with pytest.raises(ValidationError, match="alpha"):
            Pssmp(bm_triplet, 0.0)


@pytest.mark.unit
class TestTabulate:
    """Tests for grid tabulation and spec parsing."""

    def test_order_and_skipped_pairs(self, bm_levy):
        """Test q-major, x, then l order with l > x pairs skipped."""
        rows = tabulate_transforms(bm_levy, [1.0, 2.0], [1.0, 2.0], [0.0, 1.5])
        keys = [(r.q, r.x, r.l) for r in rows]
        assert keys == [
            (1.0, 1.0, 0.0), (1.0, 2.0, 0.0), (1.0, 2.0, 1.5),
            (2.0, 1.0, 0.0), (2.0, 2.0, 0.0), (2.0, 2.0, 1.5),
        ]
        assert rows[0].transform == pytest.approx(BM_TRANSFORM, rel=1e-12)
        assert all(r.family == "levy" for r in rows)

    def test_shared_states_match_direct(self, pssmp_bm):
        """Test that shared log values agree with pairwise evaluation."""
        rows = tabulate_transforms(pssmp_bm, [0.5, 3.0], [0.0, 1.0, 2.0], [0.0, 1.0])
        for r in rows:
            assert r.transform == pytest.approx(first_passage_transform(pssmp_bm, r.q, r.x, r.l), rel=1e-12)

    def test_scale_function_dispatch(self, killed_drift, bm_levy):
        """Test that scale_function picks the family evaluator."""
        assert scale_function(killed_drift, 1.0, 1.0).log_value == pytest.approx(-1.5)
        assert scale_function(bm_levy, 0.5, 1.0).log_value == pytest.approx(-1.0)

    def test_process_spec_from_dict(self):
        """Test building every family from its JSON form."""
        levy = process_spec_from_dict({"family": "levy", "triplet": {"gamma": 0.0, "sigma2": 1.0}})
        pssmp = process_spec_from_dict({"family": "pssmp", "triplet": {"gamma": 0.0, "sigma2": 1.0}, "alpha": 2})
        drift = process_spec_from_dict({"family": "killed_drift", "speed": {"coefficient": 1.0}})
        assert isinstance(levy, Levy)
        assert pssmp.alpha == 2.0
        assert drift.on_real_line
        assert process_spec_from_dict(pssmp.to_dict()) == pssmp

    def test_unknown_family(self):
        """Test that unknown families are reported."""
        with pytest.raises(ValidationError, match="family"):
            process_spec_from_dict({"family": "stable"})


FAMILY_FIXTURES = ["jump_levy", "pssmp_bm", "deterministic_csbp", "feller_csbp", "killed_drift"]


@pytest.mark.unit
class TestTransformStructure:
    """Tests shared by every family: monotone in q and multiplicative over levels."""

    @pytest.mark.parametrize("family", FAMILY_FIXTURES)
    def test_decreasing_in_q(self, request, family):
        """Test that a larger discount gives a strictly smaller transform."""
        spec = request.getfixturevalue(family)
        values = [first_passage_transform(spec, q, 3.0, 1.0) for q in (0.25, 0.5, 1.0, 2.0, 4.0)]
        assert all(0.0 < v <= 1.0 for v in values)
        assert all(b < a for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("family", FAMILY_FIXTURES)
    @pytest.mark.parametrize("q", [0.5, 2.0])
    def test_strong_markov_factorisation(self, request, family, q):
        """Test that passing 2 on the way from 3 down to 1 splits the transform."""
        spec = request.getfixturevalue(family)
        direct = first_passage_transform(spec, q, 3.0, 1.0)
        via_two = first_passage_transform(spec, q, 3.0, 2.0) * first_passage_transform(spec, q, 2.0, 1.0)
        assert direct == pytest.approx(via_two, rel=1e-9)
