"""
Tests for the delay element and delay-element chains.
"""
import pytest

from app.sim.checkers import check_glitch, default_min_pulse, rising_gaps
from app.sim.delay_element import (
    CASE_FAST,
    CASE_FRACTIONAL,
    CASE_NONE,
    DelayElementConfig,
    chain_nets,
    element_report,
    run_chain,
    run_element,
)
from app.sim.errors import ConfigError
from app.sim.kernel import MetastabilityEvent
from app.sim.logic import L0, L1, X
from app.sim.timing import NS, PS, ForcedResolution, TimingProfile
from app.sim.waveform import Waveform

T = 50 * NS
QUARTER = T // 4
# fast path: NAND + NAND, then pre-stage delay T/10 and three shaper gates
DELTA = 5 * NS + 5 * PS


@pytest.fixture
def cfg() -> DelayElementConfig:
    return DelayElementConfig.default(T)


def _captured_at_gated_fall(cycle_rise: int) -> int:
    # quarter line, t4 inverter, AND gate
    return cycle_rise + QUARTER + 2 * PS


class TestConfig:
    """Tests for element configuration."""

    def test_default(self, cfg):
        """Test the default quarter delay and shaper."""
        assert cfg.quarter_delay == QUARTER
        assert cfg.shaper.pulse_width == 9 * T // 20
        assert cfg.boot_level == L1

    def test_invalid(self):
        """Test rejected configurations."""
        shaper = DelayElementConfig.default(T).shaper
        with pytest.raises(ConfigError):
            DelayElementConfig(T, T // 2, shaper)
        with pytest.raises(ConfigError):
            DelayElementConfig(T, QUARTER, shaper, boot_level=X)
        with pytest.raises(ConfigError):
            chain_nets(0, "CLK_IN", "DROOP_IN", "CLK_OUT")


class TestDelayElement:
    """Tests for a single element with stable or racing droop input."""

    def test_fast_path_without_droop(self, cfg, ideal_timing, module_clock, no_droop):
        """Test that a high droop input forwards every flank with the same delay."""
        clk = module_clock()
        run = run_element(cfg, clk, no_droop, ideal_timing)
        assert run.report.delta == DELTA
        assert [r.delay for r in run.report.cycles] == [DELTA] * len(clk.rising_edges)
        assert run.report.cases == {CASE_NONE: len(clk.rising_edges)}
        assert {p.width for p in run.clk_out.high_pulses()} == {cfg.shaper.pulse_width}
        assert run.e_out.transitions == ()
        assert run.preconditions == []

    def test_stable_droop_adds_a_quarter(self, cfg, ideal_timing, module_clock, stable_droop):
        """Test that after the first capture every flank takes the T/4 path."""
        clk = module_clock()
        run = run_element(cfg, clk, stable_droop, ideal_timing)
        delays = [r.delay for r in run.report.cycles]
        assert delays[0] == DELTA
        assert set(delays[1:]) == {DELTA + QUARTER}
        assert [r.sampled for r in run.report.cycles[:3]] == [L1, L0, L0]
        assert run.report.cycles[1].x == QUARTER
        assert run.e_out.transitions == ((_captured_at_gated_fall(T) + PS, L0),)
        assert run.metastability == []

    def test_output_has_no_glitch(self, cfg, ideal_timing, module_clock):
        """Test a droop pulse lasting a few cycles."""
        droop = Waveform(L1, ((3 * T + T // 2, L0), (6 * T + T // 2, L1)))
        run = run_element(cfg, module_clock(), droop, ideal_timing)
        assert check_glitch(run.clk_out, default_min_pulse(T), "CLK_OUT") == []

    def test_master_resolving_low_takes_the_quarter_path(self, cfg, module_clock):
        """Test a master resolving to 0 before the slaves close: the next flank takes the full T/4 (case 5a)."""
        edge = _captured_at_gated_fall(3 * T)
        droop = Waveform(L1, ((edge, L0),))
        timing = TimingProfile.ideal(T, forced=[ForcedResolution("de.master", 2, 1 * NS, L0)])
        run = run_element(cfg, module_clock(), droop, timing)
        [event] = run.metastability
        assert event.instance == "de.master"
        assert event.entered_at == edge
        record = run.report.cycles[3]
        assert record.rising_in == 4 * T
        assert record.sampled is None
        assert record.x == QUARTER
        assert record.case == CASE_FRACTIONAL
        assert run.report.case_of(event, T) == CASE_FRACTIONAL
        assert run.report.fractional_delays() == [QUARTER]

    def test_slave_metastability_gives_fractional_delay(self, cfg, module_clock):
        """
        Test a master resolving to 0 exactly at the slave-clock capture: the
        slave goes metastable, its Mask-0 output blocks the fast path, and
        the flank leaves when the slave resolves to 1, 0 < x < T/4 without
        a glitch on CLK_OUT.
        """
        edge = _captured_at_gated_fall(3 * T)
        droop = Waveform(L1, ((edge, L0),))
        # master result lands at 4T + c2q, together with the slave's closing edge
        resolve_at_4t = 4 * T - edge
        timing = TimingProfile.ideal(T, forced=[
            ForcedResolution("de.master", 2, resolve_at_4t, L0),
            ForcedResolution("de.slave_clk", 3, 6 * NS, L1),
        ])
        run = run_element(cfg, module_clock(), droop, timing)
        assert resolve_at_4t == 37_498 * PS
        assert {e.instance for e in run.metastability} == {"de.master", "de.slave_clk"}
        record = run.report.cycles[3]
        assert record.rising_in == 4 * T
        assert record.case == CASE_FRACTIONAL
        assert record.x == 6 * NS + 2 * PS
        assert 0 < record.x < QUARTER
        assert record.e_out == L0
        assert run.report.fractional_delays() == [6 * NS + 2 * PS]
        assert check_glitch(run.clk_out, default_min_pulse(T), "CLK_OUT") == []

    def test_master_resolving_high_is_fast(self, cfg, module_clock):
        """Test a metastable master resolving to 1: the next flank is not delayed (case 5b)."""
        edge = _captured_at_gated_fall(3 * T)
        droop = Waveform(L1, ((edge, L0),))
        timing = TimingProfile.ideal(T, forced=[ForcedResolution("de.master", 2, 1 * NS, L1)])
        run = run_element(cfg, module_clock(), droop, timing)
        record = run.report.cycles[3]
        assert record.case == CASE_FAST
        assert record.x == 0
        assert run.report.cases[CASE_FAST] == 1
        assert check_glitch(run.clk_out, default_min_pulse(T), "CLK_OUT") == []

    def test_no_x_reaches_the_outputs(self, cfg, module_clock):
        """Test real timing with a droop flank racing the capture."""
        # gated enable falls after two 50 ps gates in nominal timing
        edge = 3 * T + QUARTER + 100 * PS
        droop = Waveform(L1, ((edge, L0),))
        for seed in range(4):
            run = run_element(cfg, module_clock(), droop, TimingProfile(period=T).with_seed(seed))
            assert X not in [level for _, level in run.clk_out.transitions]

    def test_unclean_input_clock_is_reported(self, cfg, ideal_timing, module_clock, no_droop):
        """Test the input clock hypothesis check."""
        run = run_element(cfg, module_clock(high=3 * T // 5), no_droop, ideal_timing)
        assert run.preconditions
        assert "HighTimeEnvelope" in run.preconditions[0]


class TestChain:
    """Tests for chains of delay elements."""

    def test_nets(self):
        """Test clock flowing right and droop bits flowing left."""
        nets = chain_nets(3, "CLK_IN", "DROOP_IN", "CLK_OUT")
        assert nets.elements[0].clk_in == "CLK_IN"
        assert nets.elements[1].clk_in == "de0.CLK_OUT"
        assert nets.elements[2].droop_in == "DROOP_IN"
        assert nets.elements[0].droop_in == "de1.E_OUT"
        assert nets.g_out == "de0.E_OUT"

    def test_delays_add_up_without_droop(self, cfg, ideal_timing, module_clock, no_droop):
        """Test n fast-path delays in series."""
        clk = module_clock()
        run = run_chain(3, cfg, clk, no_droop, ideal_timing)
        out = run.waveforms["CLK_OUT"].rising_edges
        assert out == [r + 3 * DELTA for r in clk.rising_edges[:len(out)]]
        assert [report.delta for report in run.reports] == [DELTA] * 3

    def test_stable_droop_shifts_once_per_element(self, cfg, ideal_timing, module_clock, stable_droop):
        """Test that each element adds T/4 in a different output cycle."""
        n = 3
        run = run_chain(n, cfg, module_clock(), stable_droop, ideal_timing)
        gaps = rising_gaps(run.waveforms["CLK_OUT"])
        assert gaps[:n] == [T + QUARTER] * n
        assert set(gaps[n:]) == {T}
        assert run.waveforms["de0.E_OUT"].sample(10 * T) == L0

    def test_transient_droop_sample_is_released(self, cfg, ideal_timing, module_clock):
        """
        Test a single droop sample travelling against the clock: each element
        delays one flank by T/4, and element 0, the last to see the bit,
        returns to the fast path one cycle later (a 5T/4 then a 3T/4 period).
        """
        flank = 3 * T + DELTA  # third input flank of de1
        droop = Waveform(L1, ((flank + T // 8, L0), (flank + T // 2, L1)))
        run = run_chain(2, cfg, module_clock(), droop, ideal_timing)
        assert rising_gaps(run.waveforms["de0.CLK_OUT"])[:6] == [T, T, T, T + QUARTER, T - QUARTER, T]
        assert rising_gaps(run.waveforms["CLK_OUT"])[:6] == [T, T, T + QUARTER, T, T - QUARTER, T]
        g_out = run.waveforms["de0.E_OUT"]
        assert [p.width for p in g_out.low_pulses()] == [T]
        assert check_glitch(run.waveforms["CLK_OUT"], default_min_pulse(T), "CLK_OUT") == []


class TestElementReport:
    """Tests for case tagging of metastable cycles."""

    def _report(self, e_out: Waveform):
        clk_in = Waveform(L0, ((T, L1), (T + T // 2, L0), (2 * T, L1), (2 * T + T // 2, L0)))
        clk_out = Waveform(L0, ((T + 100, L1), (T + 200, L0), (2 * T + 600, L1), (2 * T + 700, L0)))
        slave = MetastabilityEvent("de.slave_clk", 1, 2 * T + 1, 400, L1, True)
        return element_report("de", clk_in, clk_out, Waveform(L1), e_out, [slave], T, 10)

    def test_delayed_with_droop_bit_is_fractional(self):
        """Test that a delayed cycle with E_OUT low is case 5a."""
        report = self._report(Waveform(L1, ((2 * T - 10, L0),)))
        assert report.delta == 100
        assert report.cycles[1].x == 500
        assert report.cycles[1].case == CASE_FRACTIONAL

    def test_delayed_without_droop_bit_is_not_fractional(self):
        """Test that a delay without E_OUT low is not reported as case 5a."""
        report = self._report(Waveform(L1))
        assert report.cycles[1].x == 500
        assert report.cycles[1].case == CASE_FAST
        assert report.fractional_delays() == []
