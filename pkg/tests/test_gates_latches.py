"""
Tests for gates, the Gray-coded multiplexer and the storage elements.
"""
import pytest

from app.sim.errors import ConfigError, SimulationError, XPropagationError
from app.sim.gates import Mux4, delay_line, mux4
from app.sim.kernel import Netlist, Simulator, Tie, WaveformSource
from app.sim.latches import DFlipFlop, DLatch, GrayCounter, TFlipFlop, gray_bits, gray_step
from app.sim.logic import L0, L1, X
from app.sim.timing import NS, PS, ForcedResolution, TimingProfile
from app.sim.waveform import Waveform, clock_waveform

T = 50 * NS


class TestMux:
    """Tests for the Gray-select 4:1 multiplexer."""

    def test_select_mapping(self):
        """Test the Gray code to input index mapping."""
        inputs = [L0, L1, L0, L1]
        assert mux4(inputs, (L0, L0)) == L0
        assert mux4(inputs, (L0, L1)) == L1
        assert mux4(inputs, (L1, L1)) == L0
        assert mux4(inputs, (L1, L0)) == L1
        assert mux4(inputs, (X, L0)) == X

    def test_no_glitch_between_equal_inputs(self, ideal_timing):
        """Test that switching between two inputs at the same level emits nothing."""
        netlist = Netlist("mux")
        netlist.add(Tie("d0", "a0", L1))
        netlist.add(Tie("d1", "a1", L1))
        netlist.add(Tie("d2", "a2", L0))
        netlist.add(Tie("d3", "a3", L0))
        netlist.add(Tie("s1", "sel1", L0))
        netlist.add(WaveformSource("s0", "sel0", Waveform(L0, ((10 * NS, L1), (20 * NS, L0)))))
        netlist.add(Mux4("mux", ["a0", "a1", "a2", "a3"], ("sel1", "sel0"), "y"))
        netlist.record("y")
        waves = Simulator(netlist, ideal_timing).run_until(30 * NS)
        assert waves["y"].initial == L1
        assert waves["y"].transitions == ()

    def test_delay_line_helper(self):
        """Test the single-line helper on a short pulse."""
        pulse = Waveform(L0, ((2 * NS, L1), (3 * NS, L0)))
        assert delay_line(pulse, 5 * NS) == pulse.shifted(5 * NS)
        with pytest.raises(ConfigError):
            delay_line(pulse, 0)


class TestGray:
    """Tests for the 2-bit Gray counter."""

    def test_step_sequence(self):
        """Test 00 -> 01 -> 11 -> 10 -> 00 and hold."""
        state, seen = 0b00, []
        for _ in range(4):
            state = gray_step(state, L1)
            seen.append(state)
        assert seen == [0b01, 0b11, 0b10, 0b00]
        assert gray_step(0b11, L0) == 0b11
        assert gray_bits(0b10) == (L1, L0)

    def test_x_enable_is_an_error(self):
        """Test that stepping on an unknown enable raises."""
        with pytest.raises(SimulationError):
            gray_step(0b00, X)

    def test_counter_advances_on_falling_edges(self, ideal_timing):
        """Test a counter with an always-active (low) enable."""
        netlist = Netlist("gray")
        netlist.add(WaveformSource("clk", "clk", clock_waveform(T, T // 2, 4 * T, phase=T)))
        netlist.add(Tie("en", "en_n", L0))
        counter = netlist.add(GrayCounter("cnt", "clk", "en_n", "q1", "q0"))
        Simulator(netlist, ideal_timing).run_until(6 * T)
        assert [value for _, value in counter.history] == [0b01, 0b11, 0b10, 0b00]
        assert counter.history[0][0] == T + T // 2

    def test_counter_holds_when_disabled(self, ideal_timing):
        """Test that an inactive enable freezes the count."""
        netlist = Netlist("gray")
        netlist.add(WaveformSource("clk", "clk", clock_waveform(T, T // 2, 4 * T, phase=T)))
        netlist.add(Tie("en", "en_n", L1))
        counter = netlist.add(GrayCounter("cnt", "clk", "en_n", "q1", "q0"))
        netlist.record("q1", "q0")
        waves = Simulator(netlist, ideal_timing).run_until(6 * T)
        assert counter.history == []
        assert waves["q0"].transitions == ()

    def test_counter_rejects_x_enable(self, ideal_timing):
        """Test that an X enable at a counting edge stops the run."""
        netlist = Netlist("gray")
        netlist.add(WaveformSource("clk", "clk", clock_waveform(T, T // 2, 2 * T, phase=T)))
        netlist.add(WaveformSource("en", "en_n", Waveform(L0, ((T, X),))))
        netlist.add(GrayCounter("cnt", "clk", "en_n", "q1", "q0"))
        with pytest.raises(XPropagationError):
            Simulator(netlist, ideal_timing).run_until(3 * T)


class TestFlipFlops:
    """Tests for D and T flip-flops."""

    def test_toggle_flip_flop(self, ideal_timing):
        """Test that a T flip-flop with T=1 divides the clock by two."""
        netlist = Netlist("tff")
        netlist.add(WaveformSource("clk", "clk", clock_waveform(T, T // 2, 3 * T, phase=T)))
        netlist.add(Tie("t", "t", L1))
        netlist.add(TFlipFlop("tff", "t", "clk", "q", "qn"))
        netlist.record("q", "qn")
        waves = Simulator(netlist, ideal_timing).run_until(4 * T)
        assert waves["q"].transitions == ((T + PS, L1), (2 * T + PS, L0), (3 * T + PS, L1))
        assert waves["qn"] == waves["q"].inverted()

    def test_clean_capture(self, ideal_timing):
        """Test a D flip-flop capturing data that settled long before the edge."""
        netlist = Netlist("dff")
        netlist.add(WaveformSource("d", "d", Waveform(L0, ((10 * NS, L1),))))
        netlist.add(WaveformSource("clk", "clk", Waveform(L0, ((20 * NS, L1),))))
        netlist.add(DFlipFlop("ff", "d", "clk", "q"))
        netlist.record("q")
        sim = Simulator(netlist, ideal_timing)
        waves = sim.run_until(30 * NS)
        assert waves["q"].transitions == ((20 * NS + PS, L1),)
        assert sim.metastability == []

    def test_forced_metastable_capture(self):
        """Test X on Q until the forced resolution, then the forced value."""
        timing = TimingProfile.ideal(T, forced=[ForcedResolution("ff", 0, 5 * NS, L1)])
        netlist = Netlist("dff")
        netlist.add(WaveformSource("d", "d", Waveform(L0, ((T, L1),))))
        netlist.add(WaveformSource("clk", "clk", Waveform(L0, ((T, L1),))))
        netlist.add(DFlipFlop("ff", "d", "clk", "q", "qn"))
        netlist.record("q", "qn")
        sim = Simulator(netlist, timing)
        waves = sim.run_until(2 * T)
        assert waves["q"].transitions == ((T + PS, X), (T + 5 * NS + PS, L1))
        assert waves["qn"].transitions == ((T + PS, X), (T + 5 * NS + PS, L0))
        [event] = sim.metastability
        assert event.instance == "ff"
        assert event.outcome == "resolved"
        assert event.resolved_at == T + 5 * NS

    def test_x_clock_raises(self, ideal_timing):
        """Test that an X on a clock pin is reported as X propagation."""
        netlist = Netlist("dff")
        netlist.add(Tie("d", "d", L1))
        netlist.add(WaveformSource("clk", "clk", Waveform(L0, ((10 * NS, X),))))
        netlist.add(DFlipFlop("ff", "d", "clk", "q"))
        with pytest.raises(XPropagationError) as exc:
            Simulator(netlist, ideal_timing).run_until(20 * NS)
        assert exc.value.instance == "ff"


class TestDLatch:
    """Tests for the transparent latch."""

    def _latch(self, d: Waveform, en: Waveform, **kwargs) -> Netlist:
        netlist = Netlist("latch")
        netlist.add(WaveformSource("d", "d", d))
        netlist.add(WaveformSource("en", "en", en))
        netlist.add(DLatch("lat", "d", "en", "q", "qn", **kwargs))
        netlist.record("q", "qn")
        return netlist

    def test_transparent_then_hold(self, ideal_timing):
        """Test tracking while enabled and holding once closed."""
        d = Waveform(L0, ((5 * NS, L1), (15 * NS, L0)))
        en = Waveform(L1, ((10 * NS, L0),))
        waves = Simulator(self._latch(d, en), ideal_timing).run_until(20 * NS)
        assert waves["q"].transitions == ((5 * NS + PS, L1),)

    def test_transparent_low(self, ideal_timing):
        """Test a latch that passes data while its enable is low."""
        d = Waveform(L0, ((5 * NS, L1), (15 * NS, L0)))
        en = Waveform(L1, ((10 * NS, L0),))
        waves = Simulator(self._latch(d, en, transparent_high=False), ideal_timing).run_until(20 * NS)
        assert waves["q"].transitions == ((10 * NS + PS, L1), (15 * NS + PS, L0))

    def test_clear_forces_clear_level(self, ideal_timing):
        """Test the active-low clear with a high clear level."""
        netlist = Netlist("latch")
        netlist.add(Tie("d", "d", L0))
        netlist.add(Tie("en", "en", L0))
        netlist.add(WaveformSource("clr", "clr_n", Waveform(L1, ((10 * NS, L0),))))
        netlist.add(DLatch("lat", "d", "en", "q", clear_level=L1, clear_n="clr_n"))
        netlist.record("q")
        waves = Simulator(netlist, ideal_timing).run_until(20 * NS)
        assert waves["q"].transitions == ((10 * NS + PS, L1),)

    def test_choke_off(self):
        """Test that reopening the latch before resolution discards the metastability."""
        timing = TimingProfile.ideal(T, forced=[ForcedResolution("lat", 0, 10 * NS, L0)])
        d = Waveform(L0, ((20 * NS, L1),))
        en = Waveform(L1, ((20 * NS, L0), (25 * NS, L1)))
        sim = Simulator(self._latch(d, en), timing)
        waves = sim.run_until(40 * NS)
        assert waves["q"].transitions == ((20 * NS + PS, X), (25 * NS + PS, L1))
        [event] = sim.metastability
        assert event.outcome == "choked"
        assert "choke_off" in [diag.kind for diag in sim.diagnostics]
