"""
Tests for scenario documents: delay syntax, loading, hashing and VCD I/O.
"""
import io
from pathlib import Path

import pytest
from pydantic import ValidationError

from app.models.scenario import Scenario, SweepSpec
from app.sim.logic import L0, L1, X
from app.sim.timing import NS, PS
from app.sim.waveform import Waveform, clock_waveform
from app.utils.delays import format_delay, is_relative, parse_delay
from app.utils.scenario_loader import (
    ScenarioError,
    load_scenario,
    load_scenario_file,
    scenario_from_dict,
    scenario_hash,
    with_value,
)
from app.utils.vcd_io import dump_vcd, first_mismatch, parse_vcd, read_vcd, split_net, write_vcd

T = 50 * NS
SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


class TestDelays:
    """Tests for the delay micro-syntax."""

    @pytest.mark.parametrize("text, ticks", [
        ("T/3", 16_666_667),
        ("0.33T", 16_500_000),
        ("13T/120", 5_416_667),
        ("3T/4", 37_500_000),
        ("T", T),
        ("16ns", 16 * NS),
        ("200ps", 200 * PS),
        ("1.5us", 1_500_000_000),
        ("108000fs", 108_000),
        ("42", 42),
        (42, 42),
    ])
    def test_parse(self, text, ticks):
        """Test absolute, relative and bare tick delays."""
        assert parse_delay(text, T) == ticks

    @pytest.mark.parametrize("text", ["abc", "-5", "5 parsecs", "T/0", "1.5", -1])
    def test_invalid(self, text):
        """Test rejected delays."""
        with pytest.raises(ValueError):
            parse_delay(text, T)

    def test_relative_needs_period(self):
        """Test that fractions of T need a known period."""
        assert is_relative("T/4")
        assert not is_relative("16ns")
        with pytest.raises(ValueError):
            parse_delay("T/4")

    def test_format(self):
        """Test the exact-unit formatting."""
        assert format_delay(T) == "50ns"
        assert format_delay(1500) == "1500fs"
        assert format_delay(200 * PS) == "200ps"


class TestLoader:
    """Tests for loading and validating scenarios."""

    def test_defaults(self):
        """Test a minimal document."""
        scenario = load_scenario('{"name": "minimal"}')
        assert scenario.topology == "full-system"
        assert scenario.period_ticks == T
        assert scenario.ticks("T/4") == T // 4
        assert scenario.has_detector

    def test_unknown_field_has_line(self):
        """Test that unknown keys are reported with their line."""
        text = '{\n  "name": "x",\n  "bogus": 1\n}'
        with pytest.raises(ScenarioError) as exc:
            load_scenario(text)
        assert exc.value.diagnostics == [("bogus (line 3)", "unknown field 'bogus'")]

    def test_nested_error_path(self):
        """Test the dotted path of a nested schema violation."""
        with pytest.raises(ScenarioError) as exc:
            load_scenario('{"timing": {"epsilon": 1.5}}')
        [(where, _)] = exc.value.diagnostics
        assert where.startswith("timing.epsilon")

    def test_malformed_json(self):
        """Test JSON syntax errors with line and column."""
        with pytest.raises(ScenarioError) as exc:
            load_scenario('{"name": }')
        assert exc.value.diagnostics[0][0].startswith("line 1, column")
        assert exc.value.to_dict()["errors"]

    @pytest.mark.parametrize("document", [
        {"period": "T/2"},
        {"period": "50 parsecs"},
        {"topology": "ring"},
        {"cycles": 0},
        {"shaper": {"shorten": "T/10"}},
        {"timing": {"multipliers": {"de0.quarter": 0}}},
        {"stimulus": {"droop_in": {"initial": "2"}}},
    ])
    def test_rejected_documents(self, document):
        """Test schema violations."""
        with pytest.raises(ScenarioError):
            scenario_from_dict(document)

    def test_not_an_object(self):
        """Test a JSON array as document."""
        with pytest.raises(ScenarioError):
            scenario_from_dict([1, 2])

    def test_missing_file(self, tmp_path):
        """Test reading a scenario file that does not exist."""
        with pytest.raises(ScenarioError):
            load_scenario_file(tmp_path / "missing.json")

    def test_sweep_spec_fields(self):
        """Test that a sweep takes only the field its kind names."""
        assert SweepSpec(kind="seeds", seeds=(1, 4)).seeds == (1, 4)
        with pytest.raises(ValidationError):
            SweepSpec(kind="seeds", seeds=(1, 4), epsilon=[0.01])
        with pytest.raises(ValidationError):
            SweepSpec(kind="seeds", seeds=(5, 1))
        with pytest.raises(ValidationError):
            SweepSpec(kind="epsilon", epsilon=[1.0])


class TestHash:
    """Tests for canonical hashing and derived scenarios."""

    def test_hash_ignores_formatting(self):
        """Test that key order, whitespace and defaults do not change the hash."""
        a = load_scenario('{"name": "h", "cycles": 100, "period": "50ns"}')
        b = load_scenario('{\n "period": "50ns",\n "name": "h"\n}')
        assert scenario_hash(a) == scenario_hash(b)
        assert len(scenario_hash(a)) == 16

    def test_hash_changes_with_content(self):
        """Test that any field change changes the hash."""
        a = Scenario(name="h")
        assert scenario_hash(a) != scenario_hash(Scenario(name="h", cycles=101))

    def test_with_value(self):
        """Test setting a dotted path, creating missing sections."""
        base = Scenario(name="base")
        derived = with_value(base, "stimulus.droop.onset", "20T")
        assert derived.stimulus.droop.onset == "20T"
        assert base.stimulus.droop is None
        assert with_value(base, "timing.epsilon", 0.05).timing.epsilon == 0.05
        with pytest.raises(ScenarioError):
            with_value(base, "timing.epsilon", 2.0)


class TestVcd:
    """Tests for value change dump output."""

    def _waves(self):
        return {
            "CLK_OUT": clock_waveform(T, T // 2, 4 * T, phase=T),
            "de0.M_Q0": Waveform(L1, ((2 * T, X), (2 * T + 300 * PS, L0))),
            "de0.E_OUT": Waveform(L0, ((3 * T, L1),)),
        }

    def test_scopes(self):
        """Test dotted net names mapped to scopes."""
        assert split_net("de0.M_Q0") == ("top.de0", "M_Q0")
        assert split_net("CLK_OUT") == ("top", "CLK_OUT")

    def test_round_trip(self):
        """Test that a dump reads back to the same waveforms, X included."""
        waves = self._waves()
        out = io.StringIO()
        count = write_vcd(out, waves)
        assert count == sum(len(w.transitions) for w in waves.values())
        parsed = parse_vcd(out.getvalue())
        assert first_mismatch(waves, parsed) is None

    def test_files(self, tmp_path):
        """Test writing and reading a file."""
        waves = self._waves()
        path = dump_vcd(tmp_path / "trace.vcd", waves, comment="test")
        assert "$timescale" in path.read_text()
        assert first_mismatch(waves, read_vcd(path)) is None


class TestShippedScenarios:
    """Tests for the example documents under scenarios/."""

    @pytest.mark.parametrize("path", sorted(SCENARIO_DIR.glob("*.json")), ids=lambda p: p.stem)
    def test_valid(self, path):
        """Test that every shipped scenario loads."""
        scenario = load_scenario_file(path)
        assert scenario.period_ticks == T
