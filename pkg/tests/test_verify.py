"""
Tests for the Monte Carlo checks against closed forms.
"""
import math

import numpy as np
import pytest

from passage_kit.exceptions import DomainError, ValidationError
from passage_kit.exponent import LevyTriplet
from passage_kit.scale import Levy, first_passage_transform
from passage_kit.simulate import FirstPassageSample, SampleBatch
from passage_kit.verify import (
    CalibrationReport,
    MCReport,
    compare_mc_closed,
    martingale_residuals,
    mc_laplace,
    multiplicativity_check,
    z_statistic,
    zscore_calibration,
)


def make_batch(crossed, time) -> SampleBatch:
    crossed = np.asarray(crossed, dtype=bool)
    return SampleBatch(
        crossed=crossed,
        time=np.asarray(time, dtype=float),
        level=np.zeros(crossed.size),
        stream_id=np.zeros(crossed.size, dtype=np.int64),
        index=np.arange(crossed.size),
    )


@pytest.mark.unit
class TestMcLaplace:
    """Tests for the Laplace estimator."""

    def test_killed_samples_count_zero(self):
        """Test that killed samples contribute 0 to the estimate."""
        samples = [FirstPassageSample(True, 1.0, 0.0), FirstPassageSample(False, math.nan)]
        estimate, std_error = mc_laplace(samples, 0.0)
        assert estimate == 0.5
        assert std_error == pytest.approx(0.5)

    def test_constant_values_have_zero_error(self):
        """Test that identical values give an exact estimate."""
        estimate, std_error = mc_laplace(make_batch([True] * 4, [2.0] * 4), 0.5)
        assert estimate == pytest.approx(math.exp(-1.0), rel=1e-15)
        assert std_error == 0.0

    def test_rejects_negative_q(self):
        """Test that q must be nonnegative."""
        with pytest.raises(ValidationError):
            mc_laplace(make_batch([True, True], [1.0, 2.0]), -1.0)

    def test_rejects_single_sample(self):
        """Test that one sample has no standard error."""
        with pytest.raises(ValidationError):
            mc_laplace(make_batch([True], [1.0]), 1.0)

    def test_z_statistic_degenerate(self):
        """Test the zero standard error conventions."""
        assert z_statistic(0.0, 0.0) == 0.0
        assert z_statistic(0.1, 0.0) == math.inf
        assert z_statistic(-0.1, 0.0) == -math.inf
        assert z_statistic(0.2, 0.1) == pytest.approx(2.0)


@pytest.mark.unit
class TestCompareMcClosed:
    """Tests for the closed form comparison."""

    def test_brownian_passes(self, bm_levy):
        """Test that Brownian motion matches ``e^{-√(2q)(x - l)}``."""
        report = compare_mc_closed(bm_levy, 1.0, 1.0, 0.0, 20_000, seed=5, chunk_size=5_000)
        assert report.closed_form == pytest.approx(math.exp(-math.sqrt(2.0)), rel=1e-12)
        assert report.passed()
        assert abs(report.z_score) < 4.0

    def test_jumps_and_killing_pass(self, jump_levy):
        """Test a triplet with jumps and killing."""
        report = compare_mc_closed(jump_levy, 0.5, 1.0, 0.0, 20_000, seed=6, chunk_size=5_000)
        assert report.passed()
        assert 0.0 < report.estimate < 1.0

    def test_killed_drift_passes(self, killed_drift):
        """Test the deterministic family against ``e^{-(r + q)(x - l)/c}``."""
        report = compare_mc_closed(killed_drift, 1.0, 2.0, 0.0, 5_000, seed=1)
        assert report.closed_form == pytest.approx(math.exp(-3.0), rel=1e-12)
        assert report.passed()

    def test_wrong_closed_form_fails(self, bm_levy):
        """Test that a 50% error in the closed form is detected."""
        report = compare_mc_closed(bm_levy, 1.0, 1.0, 0.0, 4_000, seed=5, closed_form_factor=1.5)
        assert not report.passed()
        assert report.to_dict()["passed"] is False

    def test_needs_enough_samples(self, bm_levy):
        """Test the minimum sample count."""
        with pytest.raises(ValidationError, match="1000"):
            compare_mc_closed(bm_levy, 1.0, 1.0, 0.0, 999, seed=5)

    def test_report_serialisation(self, bm_levy):
        """Test that wall time stays out of the serialised report."""
        report = compare_mc_closed(bm_levy, 1.0, 1.0, 0.0, 1_000, seed=3)
        data = report.to_dict()
        assert "wall_time" not in data
        assert data["kind"] == "mc_laplace"
        assert data["n"] == 1_000

    def test_passed_uses_bias_allowance(self):
        """Test that the bias allowance widens the band."""
        report = MCReport(
            family="pssmp", q=1.0, x=1.0, l=0.0, estimate=0.5, std_error=0.01,
            closed_form=0.56, z_score=-6.0, n=1000, seed=0,
        )
        assert not report.passed()
        report.bias_allowance = 0.03
        assert report.passed()


@pytest.mark.unit
class TestCalibration:
    """Tests for z-score calibration."""

    def test_report_threshold(self):
        """Test that at most 12% of seeds may exceed 2."""
        assert CalibrationReport(z_scores=[0.1] * 9 + [3.0], fraction_above_2=0.1).passed()
        assert not CalibrationReport(z_scores=[3.0] * 2, fraction_above_2=1.0).passed()

    def test_one_score_per_seed(self, bm_levy):
        """Test that every seed contributes a finite score."""
        report = zscore_calibration(bm_levy, 1.0, 1.0, 0.0, 1_000, seeds=[1, 2, 3])
        assert len(report.z_scores) == 3
        assert all(math.isfinite(z) for z in report.z_scores)
        assert report.fraction_above_2 in (0.0, 1 / 3, 2 / 3, 1.0)

    def test_needs_seeds(self, bm_levy):
        """Test that an empty seed list is rejected."""
        with pytest.raises(ValidationError):
            zscore_calibration(bm_levy, 1.0, 1.0, 0.0, 1_000, seeds=[])


@pytest.mark.unit
class TestMartingale:
    """Tests for the stopped martingale check."""

    def test_correct_exponent_passes(self, bm_levy):
        """Test that ``ψ^{-1}(q)`` keeps the mean constant."""
        report = martingale_residuals(bm_levy, 1.0, 1.0, 0.0, [0.0, 0.25, 0.5, 1.0], 10_000, seed=7)
        assert report.exponent == pytest.approx(math.sqrt(2.0), rel=1e-10)
        assert report.means[0] == pytest.approx(report.target, rel=1e-12)
        assert report.passed()

    def test_wrong_exponent_fails(self, bm_levy):
        """Test that a wrong exponent drifts away from the target."""
        report = martingale_residuals(
            bm_levy, 1.0, 1.0, 0.0, [0.5, 1.0, 2.0], 10_000, seed=7, exponent_override=0.5
        )
        assert not report.passed()

    def test_threads_do_not_change_result(self, jump_levy):
        """Test determinism across thread counts."""
        grid = [0.5, 1.0]
        one = martingale_residuals(jump_levy, 1.0, 1.0, 0.0, grid, 2_000, seed=3, chunk_size=500)
        four = martingale_residuals(jump_levy, 1.0, 1.0, 0.0, grid, 2_000, seed=3, chunk_size=500, threads=4)
        assert one.means == four.means

    def test_levy_only(self, pssmp_bm):
        """Test that other families are rejected."""
        with pytest.raises(ValidationError, match="levy"):
            martingale_residuals(pssmp_bm, 1.0, 1.0, 0.0, [1.0], 100, seed=1)

    def test_needs_positive_q(self, bm_levy):
        """Test that q = 0 is rejected."""
        with pytest.raises(DomainError):
            martingale_residuals(bm_levy, 0.0, 1.0, 0.0, [1.0], 100, seed=1)

    def test_grid_must_increase(self, bm_levy):
        """Test that the time grid is validated."""
        with pytest.raises(ValidationError):
            martingale_residuals(bm_levy, 1.0, 1.0, 0.0, [1.0, 1.0], 100, seed=1)


@pytest.mark.unit
class TestMultiplicativity:
    """Tests for the strong Markov factorisation check."""

    def test_brownian_factorises(self, bm_levy):
        """Test that the direct estimate matches the product of the legs."""
        report = multiplicativity_check(bm_levy, 0.5, 2.0, 1.0, 0.0, 10_000, seed=11)
        assert report.passed()
        assert report.closed_product == pytest.approx(report.closed_direct, rel=1e-10)

    def test_closed_forms_factorise_with_killing(self):
        """Test the closed forms of a killed triplet through an intermediate level."""
        spec = Levy(LevyTriplet(gamma=-0.3, sigma2=0.4, p=0.2))
        direct = first_passage_transform(spec, 1.0, 3.0, 0.0)
        product = first_passage_transform(spec, 1.0, 3.0, 1.2) * first_passage_transform(spec, 1.0, 1.2, 0.0)
        assert direct == pytest.approx(product, rel=1e-10)

    def test_intermediate_level_out_of_range(self, bm_levy):
        """Test that a must lie between l and x."""
        with pytest.raises(DomainError):
            multiplicativity_check(bm_levy, 1.0, 2.0, 3.0, 0.0, 1_000, seed=1)
