"""
Tests for masking latches.
"""
import pytest

from app.sim.errors import ConfigError
from app.sim.kernel import Netlist, Simulator, WaveformSource
from app.sim.latches import DLatch, Metastable, Stable
from app.sim.logic import L0, L1, X
from app.sim.masking import (
    MaskingLatch,
    MaskingOutputs,
    masked_levels,
    masking_reopen,
    masking_resolve,
)
from app.sim.timing import NS, PS, ForcedResolution, ResolutionDraw, TimingProfile
from app.sim.waveform import Waveform, clock_waveform

T = 50 * NS

# data flips exactly at the closing edge, so the capture is metastable
RACE_D = Waveform(L0, ((20 * NS, L1),))
RACE_EN = Waveform(L1, ((20 * NS, L0),))


def _masking_netlist(d: Waveform, en: Waveform, variant: str = "mask01") -> Netlist:
    netlist = Netlist("mask")
    netlist.add(WaveformSource("d", "d", d))
    netlist.add(WaveformSource("en", "en", en))
    ports = {"mask0": {"q0": "q0"}, "mask1": {"q1": "q1"}, "mask01": {"q0": "q0", "q1": "q1"}}[variant]
    netlist.add(MaskingLatch("m", "d", "en", variant=variant, **ports))
    netlist.record(*ports.values())
    return netlist


def _forced(delay: int, value) -> TimingProfile:
    return TimingProfile.ideal(T, forced=[ForcedResolution("m", 0, delay, value)])


class TestMaskingLatch:
    """Tests for the masking behaviour in simulation."""

    def test_resolves_high(self):
        """Test that Q0 holds 0 while metastable then rises once; Q1 shows 1 throughout."""
        sim = Simulator(_masking_netlist(RACE_D, RACE_EN), _forced(5 * NS, L1))
        waves = sim.run_until(40 * NS)
        assert waves["q0"].transitions == ((25 * NS + PS, L1),)
        assert waves["q1"].transitions == ((20 * NS + PS, L1),)

    def test_resolves_low(self):
        """Test that Q0 never moves and Q1 falls once at resolution."""
        sim = Simulator(_masking_netlist(RACE_D, RACE_EN), _forced(5 * NS, L0))
        waves = sim.run_until(40 * NS)
        assert waves["q0"].transitions == ()
        assert waves["q1"].transitions == ((20 * NS + PS, L1), (25 * NS + PS, L0))

    def test_outputs_never_carry_x(self):
        """Test every variant over a range of seeds with real timing."""
        for variant in ("mask0", "mask1", "mask01"):
            for seed in range(5):
                timing = TimingProfile(period=T).with_seed(seed)
                waves = Simulator(_masking_netlist(RACE_D, RACE_EN, variant), timing).run_until(40 * NS)
                for wave in waves.values():
                    assert X not in [level for _, level in wave.transitions]

    def test_metastability_is_recorded(self):
        """Test the masked record of a forced capture."""
        sim = Simulator(_masking_netlist(RACE_D, RACE_EN), _forced(5 * NS, L1))
        sim.run_until(40 * NS)
        [event] = sim.metastability
        assert event.masking is True
        assert event.masked_at == 20 * NS + PS
        assert event.outcome == "resolved"

    def test_choke_off(self):
        """Test that reopening before resolution abandons the metastability."""
        en = Waveform(L1, ((20 * NS, L0), (25 * NS, L1)))
        sim = Simulator(_masking_netlist(RACE_D, en), _forced(10 * NS, L0))
        waves = sim.run_until(40 * NS)
        assert waves["q0"].transitions == ((25 * NS + PS, L1),)
        [event] = sim.metastability
        assert event.outcome == "choked"

    def test_reopen_at_resolution_time_chokes(self):
        """Test that a resolution due at the reopening tick loses to the new data."""
        en = Waveform(L1, ((20 * NS, L0), (25 * NS, L1)))
        sim = Simulator(_masking_netlist(RACE_D, en), _forced(5 * NS, L0))
        waves = sim.run_until(40 * NS)
        [event] = sim.metastability
        assert event.outcome == "choked"
        assert waves["q1"].transitions == ((20 * NS + PS, L1),)
        assert waves["q0"].transitions == ((25 * NS + PS, L1),)
        assert [d.kind for d in sim.diagnostics].count("choke_off") == 1

    def test_matches_plain_latch_without_violations(self, default_timing):
        """Test that with clean data both outputs equal a plain latch's Q."""
        d = Waveform(L0, ((3 * NS, L1), (7 * NS, L0), (12 * NS, L1), (18 * NS, L0), (33 * NS, L1)))
        en = clock_waveform(10 * NS, 5 * NS, 40 * NS, phase=10 * NS)
        netlist = _masking_netlist(d, en)
        netlist.add(DLatch("plain", "d", "en", "q"))
        netlist.record("q")
        sim = Simulator(netlist, default_timing)
        waves = sim.run_until(50 * NS)
        assert sim.metastability == []
        assert waves["q0"] == waves["q"]
        assert waves["q1"] == waves["q"]

    def test_variant_ports_are_checked(self):
        """Test configuration errors."""
        with pytest.raises(ConfigError):
            MaskingLatch("m", "d", "en", variant="mask2")
        with pytest.raises(ConfigError):
            MaskingLatch("m", "d", "en", variant="mask0", q1="q1")


class TestMaskingHelpers:
    """Tests for the pure masking functions."""

    def test_masked_levels(self):
        """Test mask levels for X and pass-through for known levels."""
        assert masked_levels(X, ("q0", "q1")) == {"q0": L0, "q1": L1}
        assert masked_levels(L1, ("q0",)) == {"q0": L1}

    def test_resolve_emits_one_transition(self):
        """Test that only the port whose mask differs moves."""
        state = Metastable(100, ResolutionDraw(50, L1))
        stable, transitions = masking_resolve(state, 150)
        assert stable == Stable(L1)
        assert transitions == (("q0", L1), ("q0b", L1))
        assert masking_resolve(Stable(L0), 10) == (Stable(L0), ())

    def test_reopen(self):
        """Test choke-off detection at reopening."""
        state = Metastable(100, ResolutionDraw(50, L0))
        assert masking_reopen(state, 120, L1) == (Stable(L1), True)
        assert masking_reopen(state, 151, L1) == (Stable(L1), False)

    def test_outputs_snapshot(self):
        """Test the output view of a metastable Mask-01 latch."""
        outputs = MaskingOutputs.of(Metastable(0, ResolutionDraw(5, L1)), "mask01")
        assert (outputs.q_mask0, outputs.q_mask1) == (L0, L1)
        assert MaskingOutputs.of(Stable(L1), "mask0").q_mask1 is None
