"""
Experiment configuration using dataclasses for type safety and validation.

An experiment is one self-describing YAML or JSON file (JSON is a YAML subset).
Loading validates the raw mapping against ``config_schema.json``, applies
environment overrides and builds the dataclasses below; each validates itself
in ``__post_init__`` and the loader turns any failure into a
``ConfigurationError``.

Configuration Classes:
- ProcessConfig: process family and parameters
- GridConfig: q, x and l lists
- SimulationConfig: sample count, seed, clock step, chunking
- VerifyConfig: checks to run and their acceptance band
- IdentifyConfig: fit target, data source and hypothesis
- OutputConfig: artifact directory and compression
- LoggingConfig: level, optional file, JSON output
- ExperimentConfig: main container

Environment variables (``.env`` files are honoured):
- PASSAGE_KIT_SEED: overrides simulation.seed
- PASSAGE_KIT_LOG_LEVEL: overrides logging.level
"""
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import jsonschema
import yaml
from dotenv import load_dotenv

from passage_kit.exceptions import ConfigurationError, PassageKitError
from passage_kit.identify import Hypothesis
from passage_kit.scale import CsbpVariant, ProcessSpec, process_spec_from_dict
from passage_kit.simulate import DEFAULT_CHUNK_SIZE, DEFAULT_DELTA
from passage_kit.simulate.engine import DEFAULT_MAX_EVENTS

logger = logging.getLogger(__name__)

COMMANDS = ("scale", "simulate", "verify", "identify")
STOCHASTIC_COMMANDS = ("simulate", "verify")
VERIFY_CHECKS = ("mc", "martingale", "multiplicativity", "calibration")
IDENTIFY_TARGETS = ("levy", "pssmp", "csbp", "lattice")
SEED_ENV = "PASSAGE_KIT_SEED"
LOG_LEVEL_ENV = "PASSAGE_KIT_LOG_LEVEL"
MAX_SEED = 2 ** 64 - 1


@dataclass
class ProcessConfig:
    """
    Process family and parameters in the JSON form of the scale package.

    Attributes:
        data: Raw mapping with a ``family`` key
    """
    data: Dict[str, Any]
    spec: ProcessSpec = field(init=False, repr=False)

    def __post_init__(self):
        try:
            self.spec = process_spec_from_dict(self.data)
        except (PassageKitError, ValueError, TypeError) as e:
            raise ValueError(f"invalid process: {e}") from e


@dataclass
class GridConfig:
    """q, x and l lists; transforms are evaluated on every pair with ``l <= x``."""
    q: List[float]
    x: List[float]
    l: List[float]

    def __post_init__(self):
        for name in ("q", "x", "l"):
            values = [float(v) for v in getattr(self, name)]
            if not values:
                raise ValueError(f"grid.{name} must not be empty")
            setattr(self, name, values)
        if any(q < 0 for q in self.q):
            raise ValueError("grid.q values must be >= 0")

    def pairs(self) -> List[tuple]:
        """``(x, l)`` pairs with ``l <= x`` in x-major order."""
        return [(x, l) for x in self.x for l in self.l if l <= x]


@dataclass
class SimulationConfig:
    """
    Monte Carlo settings.

    Attributes:
        n: Samples per run
        seed: 64-bit seed of the sample streams
        delta: Clock sub-step of the time-changed families
        chunk_size: Samples per RNG stream
        max_events: Per-path segment budget
    """
    n: int = 100_000
    seed: int = 0
    delta: float = DEFAULT_DELTA
    chunk_size: int = DEFAULT_CHUNK_SIZE
    max_events: int = DEFAULT_MAX_EVENTS

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("simulation.n must be at least 1")
        if not 0 <= int(self.seed) <= MAX_SEED:
            raise ValueError(f"simulation.seed must be a 64-bit unsigned integer, got {self.seed}")
        self.seed = int(self.seed)
        if not self.delta > 0:
            raise ValueError("simulation.delta must be positive")
        if self.chunk_size < 1:
            raise ValueError("simulation.chunk_size must be at least 1")
        if self.max_events < 1:
            raise ValueError("simulation.max_events must be at least 1")


@dataclass
class VerifyConfig:
    """
    Checks run by the ``verify`` command.

    Attributes:
        checks: Any of ``mc``, ``martingale``, ``multiplicativity``, ``calibration``
        band: Acceptance band in standard errors
        bias_check: Add the Δ vs Δ/2 allowance for clock-discretised families
        martingale_times: Time grid of the martingale check
        intermediate: Intermediate levels of the multiplicativity check
        calibration_seeds: Number of derived seeds of the calibration check
    """
    checks: List[str] = field(default_factory=lambda: ["mc"])
    band: float = 4.0
    bias_check: bool = True
    martingale_times: List[float] = field(default_factory=lambda: [0.2, 0.4, 0.6, 0.8, 1.0])
    intermediate: List[float] = field(default_factory=list)
    calibration_seeds: int = 100

    def __post_init__(self):
        unknown = set(self.checks) - set(VERIFY_CHECKS)
        if unknown:
            raise ValueError(f"unknown verify checks {sorted(unknown)}")
        if not self.checks:
            raise ValueError("verify.checks must not be empty")
        if self.band <= 0:
            raise ValueError("verify.band must be positive")
        times = [float(t) for t in self.martingale_times]
        if not times or any(b <= a for a, b in zip(times, times[1:])) or times[0] < 0:
            raise ValueError("verify.martingale_times must be nonempty, nonnegative and strictly increasing")
        self.martingale_times = times
        self.intermediate = [float(a) for a in self.intermediate]
        if self.calibration_seeds < 1:
            raise ValueError("verify.calibration_seeds must be at least 1")


@dataclass
class IdentifyConfig:
    """
    Settings of the ``identify`` command.

    Attributes:
        target: ``levy``, ``pssmp``, ``csbp`` or ``lattice``
        data: TransformGrid CSV; generated from the process and grid when None
        hypothesis: Parametric form of ψ
        p_known: Killing rate; fitted when None
        q_min: Rows with ``q <= q_min`` are ignored
        alpha: Self-similarity index (pssmp and lattice targets)
        variant: CSBP variant (csbp target)
        lattice_n: Largest lattice index (lattice target)
        restarts: Simplex restarts
    """
    target: str = "levy"
    data: Optional[str] = None
    hypothesis: str = Hypothesis.DRIFT_BM.value
    p_known: Optional[float] = 0.0
    q_min: Optional[float] = None
    alpha: Optional[float] = None
    variant: Optional[str] = None
    lattice_n: int = 64
    restarts: int = 5

    def __post_init__(self):
        if self.target not in IDENTIFY_TARGETS:
            raise ValueError(f"identify.target must be one of {IDENTIFY_TARGETS}, got {self.target!r}")
        try:
            Hypothesis(self.hypothesis)
        except ValueError as e:
            raise ValueError(f"unknown hypothesis {self.hypothesis!r}") from e
        if self.target in ("pssmp", "lattice") and not (self.alpha and self.alpha > 0):
            raise ValueError(f"identify.alpha > 0 is required for target {self.target}")
        if self.target == "csbp":
            if self.variant is None:
                raise ValueError("identify.variant is required for target csbp")
            CsbpVariant(self.variant)
        if self.p_known is not None and self.p_known < 0:
            raise ValueError("identify.p_known must be >= 0")
        if self.lattice_n < 8:
            raise ValueError("identify.lattice_n must be at least 8")

    @property
    def data_path(self) -> Optional[Path]:
        return Path(self.data) if self.data else None


@dataclass
class OutputConfig:
    output_dir: str = "passage_kit_output"
    gzip: bool = False

    @property
    def path(self) -> Path:
        return Path(self.output_dir)


@dataclass
class LoggingConfig:
    """
    Logging level and optional file output.

    Raises:
        ValueError: If the level is not a standard logging level
    """
    level: str = "INFO"
    file: Optional[str] = None
    json: bool = False

    def __post_init__(self):
        valid_levels = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
        if self.level.upper() not in valid_levels:
            raise ValueError(f"Invalid logging level: {self.level}. Must be one of {valid_levels}")
        self.level = self.level.upper()


@dataclass
class ExperimentConfig:
    """
    One experiment: a process, grids and the settings of every command.

    ``config_hash`` is the sha256 of the canonical JSON of the mapping the
    config was built from (after environment overrides); it goes into every
    artifact header.

    Example:
        >>> config = ExperimentConfig.from_yaml("experiment.yaml")
        >>> config.process.spec.family
        'levy'
    """
    process: ProcessConfig
    grid: GridConfig
    command: Optional[str] = None
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    identify: IdentifyConfig = field(default_factory=IdentifyConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)
    config_hash: str = ""

    def __post_init__(self):
        if self.command is not None and self.command not in COMMANDS:
            raise ValueError(f"command must be one of {COMMANDS}, got {self.command!r}")

    def check_command(self, command: str) -> None:
        """
        Raises:
            ConfigurationError: If the config names another command, or a
                stochastic command is run without samples
        """
        if self.command is not None and self.command != command:
            raise ConfigurationError(f"config is for command {self.command!r}, not {command!r}")
        if command in STOCHASTIC_COMMANDS and self.simulation.n < 1:
            raise ConfigurationError(f"{command} needs simulation.n >= 1")

    @classmethod
    def from_yaml(cls, config_path: str, validate: bool = True) -> "ExperimentConfig":
        """
        Load an experiment from a YAML or JSON file.

        Args:
            config_path: Path to the config file
            validate: Validate against ``config_schema.json``

        Raises:
            ConfigurationError: If the file cannot be read or parsed, or fails
                schema or dataclass validation
        """
        load_dotenv()
        try:
            with open(config_path, "r") as f:
                config_dict = yaml.safe_load(f)
        except (yaml.YAMLError, IOError, OSError) as e:
            raise ConfigurationError(f"Failed to load configuration file '{config_path}': {e}") from e

        if not isinstance(config_dict, dict):
            raise ConfigurationError(f"Configuration file '{config_path}' does not contain a mapping")

        if validate:
            cls._validate_schema(config_dict)
        config_dict = cls._apply_env_overrides(config_dict)
        return cls.from_dict(config_dict)

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]) -> "ExperimentConfig":
        """
        Build the config from a mapping; missing sections take their defaults.

        Raises:
            ConfigurationError: If any section is missing or invalid
        """
        try:
            config = cls(
                process=ProcessConfig(config_dict["process"]),
                grid=GridConfig(**config_dict["grid"]),
                command=config_dict.get("command"),
                simulation=SimulationConfig(**config_dict.get("simulation", {})),
                verify=VerifyConfig(**config_dict.get("verify", {})),
                identify=IdentifyConfig(**config_dict.get("identify", {})),
                output=OutputConfig(**config_dict.get("output", {})),
                logging=LoggingConfig(**config_dict.get("logging", {})),
                config_hash=config_hash(config_dict),
            )
        except KeyError as e:
            raise ConfigurationError(f"Configuration is missing section {e}") from e
        except (ValueError, TypeError) as e:
            raise ConfigurationError(f"Invalid configuration: {e}") from e
        logger.debug(f"Loaded {config.process.spec.family} experiment, config hash {config.config_hash}")
        return config

    @staticmethod
    def _validate_schema(config_dict: Dict[str, Any]) -> None:
        schema_path = Path(__file__).parent / "config_schema.json"
        try:
            with open(schema_path, "r") as f:
                schema = json.load(f)
        except (IOError, OSError, json.JSONDecodeError) as e:
            logger.warning(f"Could not load configuration schema for validation: {e}")
            return
        try:
            jsonschema.validate(instance=config_dict, schema=schema)
        except jsonschema.ValidationError as e:
            raise ConfigurationError(
                f"Configuration validation failed: {e.message} "
                f"(path: {'.'.join(str(p) for p in e.path) or '<root>'})"
            ) from e
        logger.debug("Configuration validated against schema")

    @staticmethod
    def _apply_env_overrides(config_dict: Dict[str, Any]) -> Dict[str, Any]:
        """Copy of ``config_dict`` with PASSAGE_KIT_SEED and PASSAGE_KIT_LOG_LEVEL applied."""
        config = json.loads(json.dumps(config_dict))

        env_seed = os.getenv(SEED_ENV)
        if env_seed:
            try:
                seed = int(env_seed)
            except ValueError as e:
                raise ConfigurationError(f"{SEED_ENV} must be an integer, got {env_seed!r}") from e
            config.setdefault("simulation", {})["seed"] = seed
            logger.info(f"Seed overridden by {SEED_ENV}: {seed}")

        env_level = os.getenv(LOG_LEVEL_ENV)
        if env_level:
            config.setdefault("logging", {})["level"] = env_level

        return config


def config_hash(config_dict: Dict[str, Any]) -> str:
    """sha256 of the canonical JSON form of a config mapping."""
    canonical = json.dumps(config_dict, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
