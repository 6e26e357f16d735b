"""
Command-line front end: one experiment config in, artifacts out.

    passage-kit <scale|simulate|verify|identify> --config FILE [--output-dir DIR] [--threads N]

Exit codes: 0 success, 2 invalid input, 3 numerical nonconvergence,
4 acceptance-band failure in ``verify``. Every failure also prints one JSON line
``{"error": ..., "message": ...}`` on stderr.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, List, Optional

from passage_kit.config import COMMANDS, ExperimentConfig
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
from passage_kit.identify import (
    TransformGrid,
    detect_levy_form,
    extract_sigma2_lattice,
    fit_csbp,
    fit_phi_grid,
    fit_pssmp,
    fit_triplet,
    generate_transform_grid,
    psi_lattice,
)
from passage_kit.reporting import (
    fit_table,
    provenance_header,
    verify_table,
    write_json_artifact,
    write_text_artifact,
    write_transform_csv,
)
from passage_kit.scale import Levy, tabulate_transforms
from passage_kit.simulate import sample_first_passages, write_sample_dump
from passage_kit.simulate.rng import derive_seed
from passage_kit.utils.logging_config import setup_logging
from passage_kit.utils.metrics import MetricsTracker
from passage_kit.verify import (
    compare_mc_closed,
    martingale_residuals,
    multiplicativity_check,
    zscore_calibration,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_INVALID = 2
EXIT_NONCONVERGENCE = 3
EXIT_ACCEPTANCE = 4

_EXIT_CODES = (
    (AcceptanceError, EXIT_ACCEPTANCE),
    (NonConvergenceError, EXIT_NONCONVERGENCE),
    ((ConfigurationError, ValidationError, DomainError, DegenerateSpecError, IdentificationError), EXIT_INVALID),
)


def exit_code_for(error: BaseException) -> int:
    for kinds, code in _EXIT_CODES:
        if isinstance(error, kinds):
            return code
    return EXIT_INVALID if isinstance(error, PassageKitError) else EXIT_UNEXPECTED


class ExperimentRunner:
    """Runs one command of an experiment and writes its artifacts."""

    def __init__(
        self,
        config: ExperimentConfig,
        output_dir: Optional[str] = None,
        threads: int = 1,
        closed_form_factor: float = 1.0,
        show_progress: bool = False,
    ):
        """
        Args:
            config: Loaded experiment
            output_dir: Overrides ``output.output_dir``
            threads: Monte Carlo worker threads; never changes results
            closed_form_factor: Multiplies closed forms in ``verify`` (negative control)
            show_progress: Show tqdm bars on stderr
        """
        self.config = config
        self.output_dir = Path(output_dir) if output_dir else config.output.path
        self.threads = threads
        self.closed_form_factor = closed_form_factor
        self.show_progress = show_progress
        self.metrics = MetricsTracker()
        self.header = provenance_header(config.config_hash, config.simulation.seed)

    @property
    def spec(self):
        return self.config.process.spec

    def run(self, command: str) -> List[Path]:
        """Dispatch ``command``; returns the artifact paths."""
        self.config.check_command(command)
        handler = getattr(self, f"run_{command}")
        artifacts = handler()
        summary = self.metrics.get_summary()
        logger.info(f"{command} finished in {summary['total_duration_seconds']:.2f}s, {len(artifacts)} artifacts")
        return artifacts

    def run_scale(self) -> List[Path]:
        grid = self.config.grid
        self.metrics.start_stage("tabulate")
        rows = tabulate_transforms(self.spec, grid.q, grid.x, grid.l)
        self.metrics.record_items(len(rows))
        path = write_transform_csv(rows, self.output_dir / "transforms.csv", self.header)
        self.metrics.finish_stage()
        print(f"{len(rows)} transforms written to {path}")
        return [path]

    def run_simulate(self) -> List[Path]:
        sim = self.config.simulation
        suffix = ".csv.gz" if self.config.output.gzip else ".csv"
        paths = []
        self.metrics.start_stage("simulate")
        for k, (x, l) in enumerate(self.config.grid.pairs()):
            batch = sample_first_passages(
                self.spec, x, l, sim.n, sim.seed, delta=sim.delta, threads=self.threads,
                chunk_size=sim.chunk_size, max_events=sim.max_events, show_progress=self.show_progress,
            )
            self.metrics.record_items(len(batch))
            header = f"{self.header}\n# family={self.spec.family} x={x!r} l={l!r} n={sim.n} delta={sim.delta!r}"
            paths.append(
                write_sample_dump(batch, self.output_dir / f"samples_{k:03d}{suffix}", header, compress=self.config.output.gzip)
            )
        self.metrics.finish_stage()
        print(f"{len(paths)} sample dumps written to {self.output_dir}")
        return paths

    def _verify_reports(self) -> List[Any]:
        sim, checks = self.config.simulation, self.config.verify
        spec, grid = self.spec, self.config.grid
        common = dict(delta=sim.delta, threads=self.threads, chunk_size=sim.chunk_size, max_events=sim.max_events)
        reports: List[Any] = []
        for q in grid.q:
            for x, l in grid.pairs():
                if "mc" in checks.checks:
                    self.metrics.start_stage(f"mc q={q} x={x} l={l}")
                    reports.append(
                        compare_mc_closed(
                            spec, q, x, l, sim.n, sim.seed, bias_check=checks.bias_check,
                            closed_form_factor=self.closed_form_factor, show_progress=self.show_progress, **common,
                        )
                    )
                if "martingale" in checks.checks:
                    if not isinstance(spec, Levy) or q <= 0:
                        logger.warning(f"Martingale check skipped for {spec.family} at q={q}: needs the levy family and q > 0")
                    else:
                        self.metrics.start_stage(f"martingale q={q} x={x} l={l}")
                        reports.append(
                            martingale_residuals(
                                spec, q, x, l, checks.martingale_times, sim.n, sim.seed,
                                threads=self.threads, chunk_size=sim.chunk_size,
                            )
                        )
                if "multiplicativity" in checks.checks:
                    for a in checks.intermediate:
                        if l <= a <= x:
                            self.metrics.start_stage(f"multiplicativity q={q} x={x} a={a} l={l}")
                            reports.append(multiplicativity_check(spec, q, x, a, l, sim.n, sim.seed, **common))
        if "calibration" in checks.checks:
            q, (x, l) = grid.q[0], grid.pairs()[0]
            self.metrics.start_stage("calibration")
            seeds = [derive_seed(sim.seed, 1_000_000 + i) for i in range(checks.calibration_seeds)]
            reports.append(zscore_calibration(spec, q, x, l, sim.n, seeds, delta=sim.delta, threads=self.threads))
        self.metrics.finish_stage()
        return reports

    def run_verify(self) -> List[Path]:
        if not self.config.grid.pairs():
            raise ConfigurationError("grid has no (x, l) pair with l <= x")
        reports = self._verify_reports()
        table = verify_table(reports, self.config.verify.band)
        paths = [
            write_json_artifact(self.output_dir / "verify_report.json", self.header, [r.to_dict(self.config.verify.band) for r in reports]),
            write_text_artifact(self.output_dir / "verify_report.txt", self.header, table),
        ]
        print(table, end="")
        failed = [r for r in reports if not r.passed(self.config.verify.band)]
        if failed:
            raise AcceptanceError(f"{len(failed)} of {len(reports)} checks fell outside the acceptance band", reports=failed)
        return paths

    def _transform_data(self, paths: List[Path]) -> TransformGrid:
        ident, grid = self.config.identify, self.config.grid
        if ident.data_path is not None:
            return TransformGrid.read_csv(ident.data_path, q_min=ident.q_min)
        data = generate_transform_grid(self.spec, grid.q, grid.x, grid.l, q_min=ident.q_min)
        paths.append(data.write_csv(self.output_dir / "transform_grid.csv", header=self.header))
        return data

    def run_identify(self) -> List[Path]:
        ident = self.config.identify
        paths: List[Path] = []
        self.metrics.start_stage(f"identify {ident.target}")
        if ident.target == "lattice":
            triplet = getattr(self.spec, "triplet", None)
            if triplet is None:
                raise ConfigurationError(f"lattice target needs a family with a triplet, got {self.spec.family}")
            sigma2 = extract_sigma2_lattice(psi_lattice(triplet, ident.alpha, ident.lattice_n), ident.alpha)
            payload = {"target": "lattice", "alpha": ident.alpha, "lattice_n": ident.lattice_n, "sigma2": sigma2}
            print(f"sigma2 = {sigma2!r}")
        else:
            data = self._transform_data(paths)
            payload = {"target": ident.target}
            if ident.target == "levy":
                form = detect_levy_form(data)
                phi = fit_phi_grid(data)
                fit = fit_triplet(phi.grid, ident.hypothesis, ident.p_known, restarts=ident.restarts)
                payload.update({"levy_form": form.to_dict(), "phi": phi.to_dict()})
            elif ident.target == "pssmp":
                fit = fit_pssmp(data, ident.alpha, ident.hypothesis, ident.p_known, restarts=ident.restarts)
            else:
                fit = fit_csbp(data, ident.variant, ident.hypothesis, ident.p_known, restarts=ident.restarts)
            payload["fit"] = fit.to_dict()
            print(fit_table(fit), end="")
        self.metrics.finish_stage()
        paths.append(write_json_artifact(self.output_dir / "fit_result.json", self.header, payload))
        return paths


def run(
    config: ExperimentConfig,
    command: str,
    output_dir: Optional[str] = None,
    threads: int = 1,
    closed_form_factor: float = 1.0,
    show_progress: bool = False,
) -> List[Path]:
    """Run one command of a loaded experiment; errors propagate as PassageKitError subclasses."""
    return ExperimentRunner(config, output_dir, threads, closed_form_factor, show_progress).run(command)


def report_failure(error: BaseException) -> int:
    """Print the single-line JSON diagnostic and return the exit code."""
    print(json.dumps({"error": type(error).__name__, "message": str(error)}), file=sys.stderr)
    return exit_code_for(error)


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return number


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="passage-kit",
        description="First-passage transforms of spectrally positive Markov processes",
    )
    parser.add_argument("command", choices=COMMANDS, help="What to run")
    parser.add_argument("--config", type=str, required=True, help="Experiment config (YAML or JSON)")
    parser.add_argument("--output-dir", type=str, default=None, help="Artifact directory (overrides the config)")
    parser.add_argument("--threads", type=_positive_int, default=1, help="Monte Carlo worker threads (default: 1)")
    parser.add_argument(
        "--log-level",
        type=str.upper,
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default=None,
        help="Overrides the config and PASSAGE_KIT_LOG_LEVEL",
    )
    parser.add_argument("--inject-closed-form-error", type=float, default=1.0, help=argparse.SUPPRESS)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)
    try:
        config = ExperimentConfig.from_yaml(args.config)
        setup_logging(
            level=args.log_level or config.logging.level,
            log_file=config.logging.file,
            enable_json=config.logging.json,
            context={"config_hash": config.config_hash[:12], "seed": config.simulation.seed},
        )
        run(
            config, args.command, args.output_dir, args.threads, args.inject_closed_form_error,
            show_progress=sys.stderr.isatty(),
        )
    except PassageKitError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return report_failure(e)
    except Exception as e:
        logger.exception("Unexpected failure")
        return report_failure(e)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
