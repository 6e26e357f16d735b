"""Statistical checks tying simulated passages to the closed forms."""
from passage_kit.verify.martingale import MartingaleReport, martingale_residuals, martingale_values
from passage_kit.verify.monte_carlo import (
    DEFAULT_BAND,
    MIN_COMPARE_SAMPLES,
    CalibrationReport,
    MCReport,
    compare_mc_closed,
    json_float,
    mc_laplace,
    z_statistic,
    zscore_calibration,
)
from passage_kit.verify.multiplicativity import MultiplicativityReport, multiplicativity_check

__all__ = [
    "DEFAULT_BAND",
    "MIN_COMPARE_SAMPLES",
    "CalibrationReport",
    "MCReport",
    "MartingaleReport",
    "MultiplicativityReport",
    "compare_mc_closed",
    "json_float",
    "martingale_residuals",
    "martingale_values",
    "mc_laplace",
    "multiplicativity_check",
    "z_statistic",
    "zscore_calibration",
]
