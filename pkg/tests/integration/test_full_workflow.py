"""
Integration tests for whole experiments: closed forms, simulation, verification
and identification driven from one config.
"""
import copy

import pytest

from passage_kit.cli.main import run
from passage_kit.config import ExperimentConfig
from passage_kit.exceptions import AcceptanceError
from passage_kit.identify import TransformGrid
from passage_kit.reporting import read_json_artifact
from passage_kit.simulate import read_sample_dump


def experiment(sample_config, **sections) -> ExperimentConfig:
    data = copy.deepcopy(sample_config)
    data.update(sections)
    return ExperimentConfig.from_dict(data)


@pytest.mark.integration
class TestFullWorkflow:
    """End-to-end runs of each command on small grids."""

    def test_scale_simulate_verify_levy(self, sample_config, tmp_path):
        """Test that one config drives all three Monte Carlo facing commands."""
        config = experiment(
            sample_config,
            process={"family": "levy", "triplet": {
                "gamma": -0.5, "sigma2": 0.5, "p": 0.1,
                "jumps": {"type": "exp_mixture", "components": [{"rate": 1.0, "scale": 2.0}]},
            }},
            verify={"checks": ["mc", "multiplicativity"], "intermediate": [0.5]},
        )
        out = tmp_path / "run"
        [transforms] = run(config, "scale", str(out))
        [dump] = run(config, "simulate", str(out))
        assert len(read_sample_dump(dump)) == 4000
        run(config, "verify", str(out))
        reports = read_json_artifact(out / "verify_report.json")
        assert [r["kind"] for r in reports] == ["mc_laplace", "multiplicativity"]
        header = transforms.read_text().splitlines()[0]
        assert header == (out / "verify_report.txt").read_text().splitlines()[0]

    def test_killed_drift_verify(self, sample_config, tmp_path):
        """Test the deterministic family under verification."""
        config = experiment(
            sample_config,
            process={"family": "killed_drift", "speed": {"coefficient": 1.0, "exponent": 0.0},
                     "killing": {"coefficient": 0.5, "exponent": 0.0}},
            grid={"q": [0.5, 1.0], "x": [2.0], "l": [0.0, 1.0]},
        )
        run(config, "verify", str(tmp_path))
        reports = read_json_artifact(tmp_path / "verify_report.json")
        assert len(reports) == 4
        assert all(r["passed"] for r in reports)

    def test_identify_round_trip(self, sample_config, tmp_path):
        """Test that transforms generated from a triplet identify that triplet."""
        config = experiment(
            sample_config,
            process={"family": "levy", "triplet": {"gamma": -1.0, "sigma2": 0.5}},
            grid={"q": [0.25, 0.5, 1.0, 2.0, 4.0], "x": [1.0, 2.0, 3.0], "l": [0.0, 0.5]},
            identify={"target": "levy", "hypothesis": "drift_bm"},
        )
        paths = run(config, "identify", str(tmp_path))
        assert {p.name for p in paths} == {"transform_grid.csv", "fit_result.json"}
        assert len(TransformGrid.read_csv(tmp_path / "transform_grid.csv")) == 30
        fit = read_json_artifact(tmp_path / "fit_result.json")["fit"]
        assert fit["parameters"]["gamma"] == pytest.approx(-1.0, abs=1e-6)
        assert fit["parameters"]["sigma2"] == pytest.approx(0.5, abs=1e-6)

    def test_acceptance_failure_keeps_report(self, config_file, tmp_path):
        """Test that a failing verify still writes its report."""
        config = ExperimentConfig.from_yaml(str(config_file))
        with pytest.raises(AcceptanceError) as info:
            run(config, "verify", str(tmp_path), closed_form_factor=0.5)
        assert len(info.value.reports) == 1
        assert (tmp_path / "verify_report.json").exists()

    @pytest.mark.slow
    def test_pssmp_verify_with_bias_check(self, sample_config, tmp_path):
        """Test the self-similar sampler against the Bessel-type closed form."""
        config = experiment(
            sample_config,
            process={"family": "pssmp", "alpha": 1.0, "triplet": {"gamma": 0.0, "sigma2": 1.0}},
            verify={"checks": ["mc"], "bias_check": True},
        )
        run(config, "verify", str(tmp_path))
        [report] = read_json_artifact(tmp_path / "verify_report.json")
        assert report["family"] == "pssmp"
        assert report["passed"] is True

    @pytest.mark.slow
    def test_csbp_verify(self, sample_config, tmp_path):
        """Test the branching sampler against the extinct display."""
        config = experiment(
            sample_config,
            process={"family": "csbp", "variant": "extinct", "triplet": {"gamma": -1.0, "sigma2": 1.0}},
            grid={"q": [1.0], "x": [2.0], "l": [1.0]},
        )
        run(config, "verify", str(tmp_path))
        [report] = read_json_artifact(tmp_path / "verify_report.json")
        assert report["passed"] is True

    @pytest.mark.slow
    def test_pssmp_identify(self, sample_config, tmp_path):
        """Test that the self-similar fit recovers a Brownian driver."""
        config = experiment(
            sample_config,
            process={"family": "pssmp", "alpha": 1.0, "triplet": {"gamma": 0.0, "sigma2": 1.0}},
            grid={"q": [0.5, 1.0, 2.0], "x": [0.5, 1.0, 2.0], "l": [0.0]},
            identify={"target": "pssmp", "alpha": 1.0, "hypothesis": "drift_bm",
                      "p_known": 0.0, "restarts": 3},
        )
        run(config, "identify", str(tmp_path))
        fit = read_json_artifact(tmp_path / "fit_result.json")["fit"]
        assert fit["parameters"]["sigma2"] == pytest.approx(1.0, abs=1e-5)
