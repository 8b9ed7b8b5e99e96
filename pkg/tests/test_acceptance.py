"""
Regression against reference radii of the benchmark systems.

Marked `acceptance`: these solve every multistart candidate and take a
few seconds each; deselect with `-m "not acceptance"`.
"""

import json

import numpy as np
import pytest

import main
from config.constants import EXIT_OK, EXIT_UNCONTROLLABLE
from services.benchmarks import brake_masks, brake_model, example_descriptor, parametric_family, random_descriptor, rlc_circuit
from services.radius import compute_radius_descriptor, compute_radius_higher_order
from services.stln import StlnConfig
from services.systems import PerturbationMask

pytestmark = pytest.mark.acceptance


class TestDescriptorExample:

    def test_radius(self):
        cfg = StlnConfig.from_settings(omega=1e13, epsilon=1e-6, multistart=True)
        result = compute_radius_descriptor(example_descriptor(), PerturbationMask.fixed_E(3, 1), cfg)
        assert result.converged
        assert result.radius_spectral == pytest.approx(0.3436, abs=1e-3)

    def test_cli_report(self, problems_dir, capsys):
        assert main.main(["radius", str(problems_dir / "example1.json")]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["radius_spectral"] == pytest.approx(0.3436, abs=1e-3)
        assert report["uncontrollability_verified"] is True


class TestParametricFamily:

    @pytest.mark.parametrize("delta, expected, tol", [
        (1.0, 0.3193, 5e-3),
        (0.6, 0.3820, 5e-3),
        (0.2, 0.2000, 5e-3),
        (0.1, 0.1, 5e-3),
        (0.01, 0.01, 5e-3),
        (0.0, 0.0, 1e-12),
    ])
    def test_table(self, delta, expected, tol):
        cfg = StlnConfig.from_settings(multistart=True)
        result = compute_radius_descriptor(parametric_family(delta), PerturbationMask.fixed_E(3, 1), cfg)
        assert result.radius_frobenius == pytest.approx(expected, abs=tol)

    def test_input_mode_below_tabulated(self):
        # rank[E, B] drops when B[2] goes to zero, which undercuts the tabulated 0.4132
        cfg = StlnConfig.from_settings(multistart=True)
        result = compute_radius_descriptor(parametric_family(0.4), PerturbationMask.fixed_E(3, 1), cfg)
        assert result.uncontrollability_verified
        assert result.radius_frobenius <= 0.4132 + 5e-3
        assert result.radius_frobenius == pytest.approx(0.4, abs=5e-3)

    def test_sweep_command(self, problems_dir, capsys):
        code = main.main(["sweep", str(problems_dir / "example2.json"),
                          "--param", "delta", "--values", "0.1,0.01,0"])
        assert code == EXIT_OK
        rows = [line.split("\t") for line in capsys.readouterr().out.strip().splitlines()[1:]]
        assert [r[0] for r in rows] == ["0.1", "0.01", "0"]
        np.testing.assert_allclose([float(r[1]) for r in rows], [0.1, 0.01, 0.0], atol=5e-3)

    def test_converged_report_checks_uncontrollable(self, problems_dir, tmp_path):
        source = json.loads((problems_dir / "example2.json").read_text())
        source["B"][2][0] = 0.1
        problem = tmp_path / "delta.json"
        problem.write_text(json.dumps(source))
        out = tmp_path / "report.json"
        assert main.main(["radius", str(problem), "--out", str(out)]) == EXIT_OK
        assert main.main(["check", str(out)]) == EXIT_UNCONTROLLABLE


class TestCircuit:

    @pytest.mark.parametrize("params, expected", [
        ((1.0, 1.0, 1.0, 1.0), 0.9997),
        ((2.0, 1.5, 3.0, 1.0), 1.4998),
        ((2.0, 3.5, 1.2, 4.0), 1.2000),
        ((0.0001, 0.1, 10.0, 3.0), 0.0001),
        ((8.0, 0.01, 0.1, 4.0), 0.0100),
    ])
    def test_table(self, params, expected):
        sys, mask = rlc_circuit(*params)
        result = compute_radius_descriptor(sys, mask, StlnConfig.from_settings(multistart=True))
        assert result.radius_frobenius == pytest.approx(expected, abs=1e-3)
        # single-entry perturbation: both norms agree
        assert result.radius_spectral == pytest.approx(result.radius_frobenius, abs=1e-6)


class TestBrake:

    @pytest.mark.parametrize("mu, expected", [
        (0.05, 0.0587),
        (0.1, 0.1031),
        (0.15, 0.1470),
        (0.2, 0.1901),
        (100.0, 1.0000),
        (1000.0, 1.0000),
    ])
    def test_table(self, mu, expected):
        cfg = StlnConfig.from_settings(multistart=True)
        result = compute_radius_higher_order(brake_model(mu), *brake_masks(), cfg=cfg)
        assert result.radius_spectral == pytest.approx(expected, abs=2e-3)

    @pytest.mark.parametrize("mu, tabulated", [(0.5, 0.4227), (1.0, 0.6813), (10.0, 0.9959)])
    def test_verified_at_or_below_tabulated(self, mu, tabulated):
        cfg = StlnConfig.from_settings(multistart=True)
        result = compute_radius_higher_order(brake_model(mu), *brake_masks(), cfg=cfg)
        assert result.uncontrollability_verified
        assert result.radius_spectral <= tabulated + 2e-3

    def test_cli_report(self, problems_dir, capsys):
        assert main.main(["radius", str(problems_dir / "brake.json")]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["radius_spectral"] == pytest.approx(0.1901, abs=2e-3)
        assert report["perturbed_higher_order"]["P"][0] == [[5.0, 0.0], [0.0, 5.0]]


class TestRandomTiming:

    def test_iteration_scale(self):
        rng = np.random.default_rng(7)
        cfg = StlnConfig.from_settings(omega=1e8, epsilon=1e-3, mode_search=False)
        iterations = []
        for _ in range(10):
            result = compute_radius_descriptor(random_descriptor(5, 1, rng), PerturbationMask.fixed_E(5, 1), cfg)
            assert result.converged
            iterations.append(result.iterations)
        assert 3 <= np.mean(iterations) <= 30

    def test_all_draws_converge(self):
        rng = np.random.default_rng(7)
        cfg = StlnConfig.from_settings(omega=1e8, epsilon=1e-3, mode_search=False)
        results = [
            compute_radius_descriptor(random_descriptor(5, 1, rng), PerturbationMask.fixed_E(5, 1), cfg)
            for _ in range(30)
        ]
        assert all(r.converged for r in results)
        assert 3 <= np.mean([r.iterations for r in results]) <= 30
