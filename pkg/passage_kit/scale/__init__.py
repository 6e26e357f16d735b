"""Scale functions and first-passage transforms for the four process families."""
from passage_kit.scale.csbp import (
    CsbpForm,
    CsbpKernel,
    classify_tail,
    csbp_log_phi,
    csbp_variant,
    get_kernel,
    scale_csbp_extinct,
    scale_csbp_recurrent,
    tail_decade_increments,
)
from passage_kit.scale.killed_drift import scale_killed_drift
from passage_kit.scale.levy import levy_exponent_slope, scale_levy
from passage_kit.scale.pssmp import (
    CoefficientCondition,
    ScaleSeries,
    coefficient_condition,
    pssmp_coefficients,
    pssmp_moment,
    scale_pssmp,
)
from passage_kit.scale.transform import (
    TransformValue,
    first_passage_transform,
    first_passage_transform_eval,
    log_scale_values,
    scale_function,
    tabulate_transforms,
)
from passage_kit.scale.types import (
    FAMILIES,
    Csbp,
    CsbpVariant,
    KilledDrift,
    Levy,
    PowerLaw,
    ProcessSpec,
    Pssmp,
    ScaleEval,
    process_spec_from_dict,
)

__all__ = [
    "FAMILIES",
    "CoefficientCondition",
    "Csbp",
    "CsbpForm",
    "CsbpKernel",
    "CsbpVariant",
    "KilledDrift",
    "Levy",
    "PowerLaw",
    "ProcessSpec",
    "Pssmp",
    "ScaleEval",
    "ScaleSeries",
    "TransformValue",
    "classify_tail",
    "coefficient_condition",
    "csbp_log_phi",
    "csbp_variant",
    "first_passage_transform",
    "first_passage_transform_eval",
    "get_kernel",
    "levy_exponent_slope",
    "log_scale_values",
    "process_spec_from_dict",
    "pssmp_coefficients",
    "pssmp_moment",
    "scale_csbp_extinct",
    "scale_csbp_recurrent",
    "scale_function",
    "scale_killed_drift",
    "scale_levy",
    "scale_pssmp",
    "tabulate_transforms",
    "tail_decade_increments",
]
