"""
Tests for three-valued logic, waveforms and the event kernel.
"""
import pytest

from app.sim.delay_element import DelayElementConfig, build_chain, build_delay_element
from app.sim.droop_detector import DroopDetectorConfig, build_droop_detector
from app.sim.errors import ArityError, CausalityError, NetlistError, OscillationError
from app.sim.gates import DelayLine, Gate
from app.sim.kernel import Event, Netlist, Simulator, Tie, WaveformSource
from app.sim.latches import DFlipFlop, DLatch
from app.sim.phase_accumulator import PhaseAccumulatorConfig, build_phase_accumulator, input_clock
from app.sim.system import SystemConfig, build_system
from app.sim.logic import L0, L1, X, Logic, eval_combinational, logic_and, logic_or
from app.sim.timing import NS, PS, TimingProfile
from app.sim.waveform import Waveform, clock_waveform


class TestLogic:
    """Kleene logic over {0, 1, X}."""

    def test_parse(self):
        """Test the accepted spellings of a level."""
        assert Logic.parse("1") == L1
        assert Logic.parse(0) == L0
        assert Logic.parse(True) == L1
        assert Logic.parse("x") == X

    def test_controlling_values_dominate_x(self):
        """Test that 0 wins an AND and 1 wins an OR even against X."""
        assert logic_and([L0, X]) == L0
        assert logic_or([L1, X]) == L1
        assert logic_and([L1, X]) == X
        assert logic_or([L0, X]) == X

    def test_nand_nor_with_x(self):
        """Test inverted gates keep the dominance rules."""
        assert eval_combinational("NAND", [L0, X]) == L1
        assert eval_combinational("NOR", [L1, X]) == L0
        assert eval_combinational("XOR", [L1, X]) == X

    def test_two_valued_truth_tables(self):
        """Test every 2-input gate on known levels against Python booleans."""
        expected = {
            "AND": lambda a, b: a and b,
            "OR": lambda a, b: a or b,
            "NAND": lambda a, b: not (a and b),
            "NOR": lambda a, b: not (a or b),
            "XOR": lambda a, b: a != b,
        }
        for kind, fn in expected.items():
            for a in (False, True):
                for b in (False, True):
                    got = eval_combinational(kind, [Logic.parse(a), Logic.parse(b)])
                    assert got == Logic.parse(fn(a, b)), (kind, a, b)

    def test_arity_errors(self):
        """Test that wrong input counts are rejected."""
        with pytest.raises(ArityError):
            eval_combinational("NOT", [L0, L1])
        with pytest.raises(ArityError):
            eval_combinational("AND", [L1])
        with pytest.raises(ArityError):
            Gate("g", "NAND", ["a"], "y")


class TestWaveform:
    """Tests for the Waveform value type."""

    def test_transition_takes_effect_at_its_timestamp(self):
        """Test sampling right before, at and after a transition."""
        w = Waveform(L0, ((10, L1),))
        assert w.sample(9) == L0
        assert w.sample(10) == L1
        assert w.sample(11) == L1

    def test_invalid_transitions_rejected(self):
        """Test the strictly-increasing and level-changing invariants."""
        with pytest.raises(ValueError):
            Waveform(L0, ((10, L1), (10, L0)))
        with pytest.raises(ValueError):
            Waveform(L0, ((10, L0),))

    def test_from_changes_normalizes(self):
        """Test that no-ops are dropped and later entries win at equal times."""
        w = Waveform.from_changes("0", [(5, "0"), (10, "1"), (10, "0"), (20, "1")])
        assert w.transitions == ((20, L1),)

    def test_pulses_and_edges(self):
        """Test pulse extraction on a clock."""
        clk = clock_waveform(100, 40, 300, phase=100)
        assert clk.rising_edges == [100, 200, 300]
        assert [p.width for p in clk.high_pulses()] == [40, 40, 40]
        assert [p.width for p in clk.low_pulses()] == [60, 60]

    def test_shift_and_invert(self):
        """Test shifting and inverting preserve structure."""
        w = Waveform(L0, ((10, L1), (30, L0)))
        assert w.shifted(5).transitions == ((15, L1), (35, L0))
        assert w.inverted().initial == L1
        with pytest.raises(ValueError):
            w.shifted(-1)

    def test_dict_round_trip(self):
        """Test the JSON-friendly representation."""
        w = Waveform(L1, ((10, X), (12, L0)))
        assert Waveform.from_dict(w.to_dict()) == w


def _inverter_netlist(source: Waveform) -> Netlist:
    netlist = Netlist("inv")
    netlist.add(WaveformSource("src", "a", source))
    netlist.add(Gate("inv", "NOT", ["a"], "y"))
    netlist.record("a", "y")
    return netlist


class TestSimulator:
    """Tests for scheduling, transport semantics and guards."""

    def test_inverter_follows_input(self, ideal_timing):
        """Test a NOT gate on a square wave: inverted and shifted by the gate delay."""
        clk = clock_waveform(25 * NS, 12_500_000, 200 * NS, phase=25 * NS)
        waves = Simulator(_inverter_netlist(clk), ideal_timing).run_until(250 * NS)
        assert waves["y"] == clk.inverted().shifted(1 * PS)

    def test_same_time_events_run_in_insertion_order(self, ideal_timing):
        """Test that events at equal times fire in schedule order."""
        netlist = Netlist()
        netlist.add(Tie("t", "a", L0))
        sim = Simulator(netlist, ideal_timing)
        order = []
        for name in ("first", "second", "third"):
            sim.call_at(100, lambda name=name: order.append(name))
        sim.run_until(100)
        assert order == ["first", "second", "third"]

    def test_scheduling_into_the_past_raises(self, ideal_timing):
        """Test the causality guard."""
        netlist = Netlist()
        netlist.add(Tie("t", "a", L0))
        sim = Simulator(netlist, ideal_timing)
        sim.run_until(7)
        with pytest.raises(CausalityError):
            sim.schedule(Event(5))

    def test_transport_delay_keeps_short_pulses(self, ideal_timing):
        """Test that a 1 ps pulse survives a 10 ns delay line."""
        pulse = Waveform(L0, ((10 * NS, L1), (10 * NS + PS, L0)))
        netlist = Netlist()
        netlist.add(WaveformSource("src", "a", pulse))
        netlist.add(DelayLine("line", "a", "y", 10 * NS))
        netlist.record("y")
        waves = Simulator(netlist, ideal_timing).run_until(30 * NS)
        assert waves["y"] == pulse.shifted(10 * NS)

    def test_simultaneous_inputs_leave_no_zero_width_glitch(self, ideal_timing):
        """Test an AND gate whose inputs swap at the same instant."""
        netlist = Netlist()
        netlist.add(WaveformSource("sa", "a", Waveform(L1, ((10 * NS, L0),))))
        netlist.add(WaveformSource("sb", "b", Waveform(L0, ((10 * NS, L1),))))
        netlist.add(Gate("and", "AND", ["a", "b"], "y"))
        netlist.record("y")
        waves = Simulator(netlist, ideal_timing).run_until(20 * NS)
        assert waves["y"].transitions == ()

    def test_runs_are_deterministic(self, default_timing):
        """Test that two runs of the same netlist give identical waveforms."""
        clk = clock_waveform(50 * NS, 25 * NS, 500 * NS, phase=50 * NS)
        first = Simulator(_inverter_netlist(clk), default_timing).run_until(600 * NS)
        second = Simulator(_inverter_netlist(clk), default_timing).run_until(600 * NS)
        assert first == second

    def test_ring_oscillator_trips_storm_guard(self, ideal_timing):
        """Test that a self-feeding NAND stops with OscillationError."""
        netlist = Netlist("ring")
        netlist.add(WaveformSource("en_src", "en", Waveform(L0, ((10 * NS, L1),))))
        netlist.add(Gate("osc", "NAND", ["en", "n"], "n"))
        sim = Simulator(netlist, ideal_timing, storm_cap=100)
        with pytest.raises(OscillationError) as exc:
            sim.run_until(20 * NS)
        assert exc.value.net == "n"

    def test_multiple_drivers_rejected(self, ideal_timing):
        """Test that two components driving one net is a netlist error."""
        netlist = Netlist()
        netlist.add(Tie("a", "y", L0))
        netlist.add(Tie("b", "y", L1))
        with pytest.raises(NetlistError):
            Simulator(netlist, ideal_timing)

    def test_undriven_input_rejected(self, ideal_timing):
        """Test that reading a net nobody drives is a netlist error."""
        netlist = Netlist()
        netlist.add(Gate("inv", "NOT", ["floating"], "y"))
        with pytest.raises(NetlistError):
            Simulator(netlist, ideal_timing)

    def test_duplicate_instance_rejected(self):
        """Test that instance names are unique."""
        netlist = Netlist()
        netlist.add(Tie("a", "y", L0))
        with pytest.raises(NetlistError):
            netlist.add(Tie("a", "z", L1))

    def test_x_source_propagates(self, ideal_timing):
        """Test that an X input reaches the output of a non-dominated gate."""
        netlist = _inverter_netlist(Waveform(L0, ((10 * NS, X),)))
        waves = Simulator(netlist, ideal_timing).run_until(20 * NS)
        assert waves["y"].sample(10 * NS + PS) == X

    def test_settled_initial_state(self, ideal_timing):
        """Test that nets start from the settled combinational fixpoint."""
        waves = Simulator(_inverter_netlist(Waveform(L0)), ideal_timing).run_until(1 * NS)
        assert waves["y"].initial == L1
        assert waves["y"].transitions == ()

    def test_timing_profile_seed(self):
        """Test the seed plumbing of timing profiles."""
        timing = TimingProfile.ideal().with_seed(42)
        assert timing.seed == 42


class TestElaboration:
    """Tests that every module netlist elaborates and settles."""

    def test_storage_without_inverted_output(self, ideal_timing):
        """Test a latch and a flip-flop whose QN is left unconnected."""
        netlist = Netlist()
        netlist.add(Tie("d_tie", "d", L1))
        netlist.add(WaveformSource("en_src", "en", Waveform(L1, ((10 * NS, L0),))))
        netlist.add(DLatch("lat", "d", "en", "q_lat"))
        netlist.add(DFlipFlop("ff", "d", "en", "q_ff"))
        netlist.record("q_lat", "q_ff")
        waves = Simulator(netlist, ideal_timing).run_until(20 * NS)
        assert waves["q_lat"].sample(15 * NS) == L1
        assert waves["q_ff"].initial == L0

    @pytest.mark.parametrize("topology", ["delay-element", "chain", "phase-accumulator", "droop-detector", "full-system"])
    def test_topologies_elaborate(self, topology, ideal_timing):
        """Test that the simulator accepts each module netlist and reaches t_end."""
        period = 50 * NS
        clk = clock_waveform(period, period // 2, 4 * period, phase=period)
        element = DelayElementConfig.default(period)
        if topology == "delay-element":
            netlist = build_delay_element(element, clk, Waveform(L0))
        elif topology == "chain":
            netlist, _ = build_chain(3, element, clk, Waveform(L0))
        elif topology == "phase-accumulator":
            netlist = build_phase_accumulator(PhaseAccumulatorConfig.default(period), input_clock(period, 4 * period),
                                              Waveform(L1), Waveform(L0, ((period // 4, L1),)))
        elif topology == "droop-detector":
            netlist = build_droop_detector(DroopDetectorConfig(), clk)
        else:
            netlist, _ = build_system(SystemConfig.default(period), 4 * period)
        sim = Simulator(netlist, ideal_timing)
        sim.run_until(4 * period)
        assert sim.now == 4 * period
