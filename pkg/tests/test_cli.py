"""
Tests for the droop-sim command line.
"""
import json
from pathlib import Path

import pytest

from app.cli import EXIT_FINDINGS, EXIT_INVALID, EXIT_OK, EXIT_SIMULATION, main

FRACTIONAL = Path(__file__).resolve().parent.parent / "scenarios" / "fractional_delay.json"


@pytest.fixture
def write_scenario(tmp_path):
    """Write a scenario document and return its path."""
    def write(document, name="scenario.json"):
        path = tmp_path / name
        path.write_text(document if isinstance(document, str) else json.dumps(document, indent=2))
        return path
    return write


class TestValidate:
    def test_valid(self, write_scenario, element_scenario, capsys):
        """Test that a valid document prints its hash."""
        assert main(["validate", str(write_scenario(element_scenario))]) == EXIT_OK
        assert "hash" in capsys.readouterr().out

    def test_invalid(self, write_scenario, capsys):
        """Test diagnostics with field path and line."""
        path = write_scenario('{\n  "name": "x",\n  "cycles": -3\n}')
        assert main(["validate", str(path)]) == EXIT_FINDINGS
        assert "cycles (line 3)" in capsys.readouterr().err


class TestRun:
    """Tests for exit codes of single runs."""

    def test_pass(self, write_scenario, element_scenario, tmp_path, capsys):
        """Test a clean run and its artifact directory."""
        out = tmp_path / "artifacts"
        assert main(["run", str(write_scenario(element_scenario)), "--out", str(out)]) == EXIT_OK
        assert capsys.readouterr().out.startswith("PASS")
        [directory] = list(out.iterdir())
        assert (directory / "report.json").is_file()

    def test_findings(self, write_scenario, tmp_path):
        """Test exit status 1 for a run with findings."""
        document = {
            "name": "old-shaper",
            "topology": "pulse-shaper",
            "idealized": True,
            "cycles": 8,
            "shaper": {"variant": "old"},
            "stimulus": {"clock_high": "0.9T"},
        }
        assert main(["run", str(write_scenario(document)), "--out", str(tmp_path / "a")]) == EXIT_FINDINGS

    def test_unusable_document(self, write_scenario):
        """Test exit status 2 for malformed JSON and missing files."""
        assert main(["run", str(write_scenario("{not json"))]) == EXIT_INVALID
        assert main(["run", "does-not-exist.json"]) == EXIT_INVALID

    def test_simulation_error(self, write_scenario, element_scenario, tmp_path):
        """Test exit status 3 when the scenario cannot be simulated."""
        document = {**element_scenario, "stimulus": {"clock_high": "T"}}
        assert main(["run", str(write_scenario(document)), "--out", str(tmp_path / "a")]) == EXIT_SIMULATION


class TestSweepAndOracle:
    def test_seed_sweep(self, write_scenario, element_scenario, tmp_path):
        """Test a seed sweep writing its aggregate report."""
        out = tmp_path / "sweep.json"
        code = main(["sweep", str(write_scenario(element_scenario)), "--seeds", "1..2",
                     "--workers", "1", "--out", str(out)])
        assert code == EXIT_OK
        assert json.loads(out.read_text())["passed"] == 2

    def test_resolution_sweep(self, tmp_path, capsys):
        """Test sweeping the forced slave resolution of the shipped fractional-delay scenario."""
        out = tmp_path / "sweep.json"
        code = main(["sweep", str(FRACTIONAL), "--resolution", "6ns:8ns:2ns", "--instance", "de.slave_clk",
                     "--workers", "1", "--out", str(out)])
        assert code in (EXIT_OK, EXIT_FINDINGS)
        report = json.loads(out.read_text())
        assert report["sweep"] == "resolution"
        assert report["fractional_delay_range"] == [6_000_000 + 2_000, 8_000_000 + 2_000]
        assert "fractional delays" in capsys.readouterr().out

    def test_bad_sweep(self, write_scenario, element_scenario):
        """Test an unparsable sweep range."""
        assert main(["sweep", str(write_scenario(element_scenario)), "--seeds", "x..y"]) == EXIT_INVALID

    def test_oracle(self, write_scenario, element_scenario, capsys):
        """Test the reference-model cross-check."""
        assert main(["oracle", str(write_scenario(element_scenario))]) == EXIT_OK
        assert '"passed": true' in capsys.readouterr().out
