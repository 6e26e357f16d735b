"""
passage-kit

Scale functions and first-passage Laplace transforms of spectrally positive
Markov processes (Lévy, self-similar, branching and killed-drift families),
with Monte Carlo verification and identification from transform data.
"""
__version__ = "1.0.0"

from passage_kit.exceptions import (
    AcceptanceError,
    ConfigurationError,
    DegenerateSpecError,
    DomainError,
    IdentificationError,
    NonConvergenceError,
    PassageKitError,
    ValidationError,
)
from passage_kit.exponent import LevyTriplet, eval_psi, psi_inverse, validate_triplet
from passage_kit.scale import (
    Csbp,
    CsbpVariant,
    KilledDrift,
    Levy,
    PowerLaw,
    Pssmp,
    first_passage_transform,
    scale_function,
)

__all__ = [
    '__version__',
    'AcceptanceError',
    'ConfigurationError',
    'Csbp',
    'CsbpVariant',
    'DegenerateSpecError',
    'DomainError',
    'IdentificationError',
    'KilledDrift',
    'Levy',
    'LevyTriplet',
    'NonConvergenceError',
    'PassageKitError',
    'PowerLaw',
    'Pssmp',
    'ValidationError',
    'eval_psi',
    'first_passage_transform',
    'psi_inverse',
    'scale_function',
    'validate_triplet',
]
