"""Laplace exponents of spectrally positive Lévy processes and their inverses."""
from passage_kit.exponent.jump_measures import (
    Atoms,
    ExpMixture,
    JumpMeasureSpec,
    NoJumps,
    jump_measure_from_dict,
)
from passage_kit.exponent.laplace_exponent import (
    LevyTriplet,
    PsiInverseResult,
    TripletDiagnostics,
    effective_drift,
    eval_psi,
    eval_psi_increment,
    eval_psi_prime,
    eval_psi_second,
    psi_inverse,
    psi_minimizer,
    psi_prime_at_zero,
    require_valid,
    validate_triplet,
)

__all__ = [
    "Atoms",
    "ExpMixture",
    "JumpMeasureSpec",
    "LevyTriplet",
    "NoJumps",
    "PsiInverseResult",
    "TripletDiagnostics",
    "effective_drift",
    "eval_psi",
    "eval_psi_increment",
    "eval_psi_prime",
    "eval_psi_second",
    "jump_measure_from_dict",
    "psi_inverse",
    "psi_minimizer",
    "psi_prime_at_zero",
    "require_valid",
    "validate_triplet",
]
