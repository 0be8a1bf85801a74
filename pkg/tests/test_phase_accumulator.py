"""
Tests for the phase accumulator.
"""
import pytest

from app.sim.checkers import check_glitch, default_min_pulse, rising_gaps
from app.sim.errors import ConfigError
from app.sim.logic import L0, L1
from app.sim.phase_accumulator import (
    AccumulatorNets,
    PhaseAccumulatorConfig,
    input_clock,
    phase_offsets,
    run_phase_accumulator,
)
from app.sim.timing import NS, PS
from app.sim.waveform import Waveform

T = 50 * NS
# TFF clock buffer + clock-to-q, then the mux
FIRST_RISE = T // 2 + 3 * PS


@pytest.fixture
def cfg() -> PhaseAccumulatorConfig:
    return PhaseAccumulatorConfig.default(T)


def _run(cfg, g_in, timing, reset_n=None, cycles=10):
    clk = input_clock(T, cycles * T)
    return run_phase_accumulator(cfg, clk, g_in, reset_n, timing)


class TestConfig:
    """Tests for accumulator configuration."""

    def test_default_select_delay(self, cfg):
        """Test the 0.33T default."""
        assert cfg.select_delay == 16_500_000

    def test_select_delay_bounds(self):
        """Test that the select delay must lie strictly inside (T/4, T/2)."""
        with pytest.raises(ConfigError):
            PhaseAccumulatorConfig(T, T // 4)
        with pytest.raises(ConfigError):
            PhaseAccumulatorConfig(T, T // 2)

    def test_input_clock(self):
        """Test the T/2 input clock."""
        clk = input_clock(T, 3 * T)
        assert clk.rising_edges[:3] == [T // 2, T, 3 * T // 2]
        assert {p.width for p in clk.high_pulses()} == {T // 4}


class TestPhaseAccumulator:
    """Tests for phase generation and accumulation in idealized timing."""

    def test_four_phases(self, cfg, ideal_timing):
        """Test Q1, Q2, QN1, QN2 spaced by a quarter period."""
        run = _run(cfg, Waveform(L1), ideal_timing)
        offsets = phase_offsets(run.waveforms, AccumulatorNets().phases, T)
        assert offsets == [0, T // 4, T // 2, 3 * T // 4]

    def test_no_droop_is_a_plain_divider(self, cfg, ideal_timing):
        """Test that without droop the output follows Q1."""
        run = _run(cfg, Waveform(L1), ideal_timing)
        assert run.clk_out.rising_edges[0] == FIRST_RISE
        assert set(rising_gaps(run.clk_out)) == {T}
        assert run.report.total_shift_steps == 0
        assert run.report.findings == []

    def test_constant_droop_shifts_every_cycle(self, cfg, ideal_timing):
        """Test that each falling flank with droop adds a quarter period."""
        run = _run(cfg, Waveform(L0), ideal_timing)
        assert set(rising_gaps(run.clk_out)) == {T + T // 4}
        complete = [c for c in run.report.cycles if c.high_time is not None]
        assert all(c.shifted for c in complete)
        assert {c.high_time for c in complete} == {T // 2}
        assert run.report.findings == []
        assert check_glitch(run.clk_out, default_min_pulse(T), "CLK_OUT") == []

    def test_select_changes_inside_window(self, cfg, ideal_timing):
        """Test the select change offset after a counting flank."""
        run = _run(cfg, Waveform(L0), ideal_timing)
        first = run.report.cycles[0]
        fall = first.rising + first.high_time
        assert first.select_change - fall == cfg.select_delay + PS

    def test_droop_pulse(self, cfg, ideal_timing):
        """Test a droop flag seen at two output rising flanks."""
        g_in = Waveform(L1, ((60 * NS, L0), (160 * NS, L1)))
        run = _run(cfg, g_in, ideal_timing)
        assert run.report.total_shift_steps == 2
        assert [c.sampled for c in run.report.cycles[:4]] == [L1, L0, L0, L1]
        assert rising_gaps(run.clk_out)[:4] == [T, T + T // 4, T + T // 4, T]

    def test_reset_blocks_counting(self, cfg, ideal_timing):
        """Test that no shift happens before the reset release."""
        reset_n = Waveform(L0, ((3 * T + T // 4, L1),))
        run = _run(cfg, Waveform(L0), ideal_timing, reset_n=reset_n)
        assert [c.shifted for c in run.report.cycles[:4]] == [False, False, False, True]
        assert run.waveforms["pa.RST_SYNC"].transitions == ((3 * T + T // 4 + PS, L1),)

    def test_input_breach_is_flagged(self, cfg, ideal_timing):
        """Test that G_IN moving at an output rising flank is reported."""
        g_in = Waveform(L1, ((FIRST_RISE + T, L0),))
        run = _run(cfg, g_in, ideal_timing)
        kinds = {(d.instance, d.kind) for d in run.diagnostics}
        assert ("pa.droop_latch", "precondition") in kinds
