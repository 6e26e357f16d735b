"""Recovery of process parameters from first-passage transform data."""
from passage_kit.identify.branching import fit_csbp
from passage_kit.identify.grid import TransformEntry, TransformGrid, generate_transform_grid
from passage_kit.identify.levy_form import (
    LevyFormResult,
    PhiDiagnostic,
    PhiFit,
    PhiGrid,
    detect_levy_form,
    fit_phi_grid,
)
from passage_kit.identify.optimize import FitResult, Hypothesis
from passage_kit.identify.self_similar import fit_pssmp
from passage_kit.identify.triplet_fit import extract_sigma2_lattice, fit_triplet, psi_lattice

__all__ = [
    "FitResult",
    "Hypothesis",
    "LevyFormResult",
    "PhiDiagnostic",
    "PhiFit",
    "PhiGrid",
    "TransformEntry",
    "TransformGrid",
    "detect_levy_form",
    "extract_sigma2_lattice",
    "fit_csbp",
    "fit_phi_grid",
    "fit_pssmp",
    "fit_triplet",
    "generate_transform_grid",
    "psi_lattice",
]
