"""
Pytest configuration and shared fixtures.
"""
from pathlib import Path
from typing import Dict

import pytest
import yaml

from passage_kit.exponent import ExpMixture, LevyTriplet
from passage_kit.scale import Csbp, KilledDrift, Levy, PowerLaw, Pssmp


@pytest.fixture
def bm_triplet() -> LevyTriplet:
    """Standard Brownian motion, no drift, no killing."""
    return LevyTriplet(gamma=0.0, sigma2=1.0)


@pytest.fixture
def bm_levy(bm_triplet) -> Levy:
    return Levy(bm_triplet)


@pytest.fixture
def jump_triplet() -> LevyTriplet:
    """Downward drift, Gaussian part, exponential upward jumps and killing."""
    return LevyTriplet(gamma=-0.5, sigma2=0.5, jumps=ExpMixture(((1.0, 2.0),)), p=0.1)


@pytest.fixture
def jump_levy(jump_triplet) -> Levy:
    return Levy(jump_triplet)


@pytest.fixture
def killed_drift() -> KilledDrift:
    """Unit speed on the real line with constant killing 0.5."""
    return KilledDrift(speed=PowerLaw(1.0), killing=PowerLaw(0.5))


@pytest.fixture
def deterministic_csbp() -> Csbp:
    """Mechanism ``ψ(z) = z``: the population decays like ``x e^{-t}``."""
    return Csbp(LevyTriplet(gamma=-1.0), "recurrent")


@pytest.fixture
def feller_csbp() -> Csbp:
    """Feller diffusion with mechanism ``ψ(z) = z + z²/2``; hits 0 in finite time."""
    return Csbp(LevyTriplet(gamma=-1.0, sigma2=1.0), "extinct")


@pytest.fixture
def pssmp_bm(bm_triplet) -> Pssmp:
    """Self-similar family driven by Brownian motion with index 1."""
    return Pssmp(bm_triplet, 1.0)


@pytest.fixture
def sample_config(tmp_path) -> Dict:
    """Fixture providing a sample experiment configuration dictionary."""
    return {
        "process": {
            "family": "levy",
            "triplet": {"gamma": 0.0, "sigma2": 1.0},
        },
        "grid": {
            "q": [1.0],
            "x": [1.0],
            "l": [0.0],
        },
        "simulation": {
            "n": 4000,
            "seed": 7,
            "chunk_size": 1000,
        },
        "verify": {
            "checks": ["mc"],
            "band": 4.0,
        },
        "output": {
            "output_dir": str(tmp_path / "out"),
        },
        "logging": {
            "level": "WARNING",
        },
    }


@pytest.fixture
def config_file(tmp_path, sample_config) -> Path:
    """Fixture providing a config file written from ``sample_config``."""
    path = tmp_path / "experiment.yaml"
    with open(path, "w") as f:
        yaml.dump(sample_config, f)
    return path


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    """Keep environment overrides from leaking into tests."""
    monkeypatch.delenv("PASSAGE_KIT_SEED", raising=False)
    monkeypatch.delenv("PASSAGE_KIT_LOG_LEVEL", raising=False)
