"""Monte Carlo first-passage sampling for all process families."""
from passage_kit.simulate.brownian import (
    inverse_gaussian_passage,
    sample_no_crossing_endpoint,
    sample_passage_times,
)
from passage_kit.simulate.dump import read_sample_dump, write_sample_dump
from passage_kit.simulate.engine import PassageOutcome, run_passages
from passage_kit.simulate.rng import RngStream, as_generator
from passage_kit.simulate.samplers import (
    DEFAULT_CHUNK_SIZE,
    DEFAULT_DELTA,
    FirstPassageSample,
    SampleBatch,
    chunk_layout,
    sample_csbp_first_passage,
    sample_first_passages,
    sample_killed_drift_passage,
    sample_levy_first_passage,
    sample_pssmp_first_passage,
    simulate_outcomes,
)

__all__ = [
    "DEFAULT_CHUNK_SIZE",
    "DEFAULT_DELTA",
    "FirstPassageSample",
    "PassageOutcome",
    "RngStream",
    "SampleBatch",
    "as_generator",
    "chunk_layout",
    "inverse_gaussian_passage",
    "read_sample_dump",
    "run_passages",
    "sample_csbp_first_passage",
    "sample_first_passages",
    "sample_killed_drift_passage",
    "sample_levy_first_passage",
    "sample_no_crossing_endpoint",
    "sample_passage_times",
    "sample_pssmp_first_passage",
    "simulate_outcomes",
    "write_sample_dump",
]
