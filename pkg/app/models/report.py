"""
Run and sweep reports as emitted to report.json and over HTTP.
"""
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, Field

REPORT_SCHEMA_VERSION = 1


class Finding(BaseModel):
    """One checker violation with its reproducer."""
    kind: str
    net: str
    time: int = Field(..., description="Simulation time in femtoseconds")
    measured: Union[int, float, str]
    bound: str
    message: str = ""
    seed: Optional[int] = None
    scenario_hash: Optional[str] = None


class CycleEntry(BaseModel):
    cycle: int
    rising_in: int
    rising_out: int
    delay: int
    x: Optional[int] = Field(None, description="Delay beyond the measured fast-path delay")
    sampled: Optional[str] = Field(None, description="Droop bit that steered this flank, null if metastable")
    e_out: str
    case: str = Field("none", description="none, 5a (fractional delay) or 5b (fast path)")


class ElementSummary(BaseModel):
    instance: str
    delta: Optional[int] = Field(None, description="Measured fast-path rising delay")
    cases: Dict[str, int] = Field(default_factory=dict)
    fractional_delays: List[int] = Field(default_factory=list)
    cycles: List[CycleEntry] = Field(default_factory=list)


class AccumulatorEntry(BaseModel):
    cycle: int
    rising: int
    high_time: Optional[int] = None
    low_time: Optional[int] = None
    sampled: str
    shifted: bool
    select_change: Optional[int] = None


class AccumulatorSummary(BaseModel):
    total_shift_steps: int
    counting_edges: List[int] = Field(default_factory=list)
    cycles: List[AccumulatorEntry] = Field(default_factory=list)


class DetectorSummary(BaseModel):
    crossover_voltage: float
    crossover_multiplier: float
    detections: int = Field(..., description="Rising flanks of DETECT")
    first_detection: Optional[int] = None
    calibrated: bool = Field(..., description="CALIBRATE reads 1 at the end of the run")


class MetastabilityEntry(BaseModel):
    instance: str
    cycle: int
    entered_at: int
    resolution_delay: int
    value: str
    masking: bool
    masked_at: Optional[int] = None
    resolved_at: Optional[int] = None
    outcome: str
    case: Optional[str] = Field(None, description="Case tag of the delay-element cycle it fell into")


class DiagnosticEntry(BaseModel):
    time: int
    instance: str
    kind: str
    message: str


class RunReport(BaseModel):
    """Outcome of one scenario run; passed is true iff findings is empty."""
    schema_version: int = REPORT_SCHEMA_VERSION
    scenario: str
    scenario_hash: str
    seed: int
    topology: str
    passed: bool
    t_end: int
    output_cycles: int = 0
    findings: List[Finding] = Field(default_factory=list)
    finding_counts: Dict[str, int] = Field(default_factory=dict)
    delta: Optional[int] = Field(None, description="Measured fast-path delay of the output-side element")
    elements: List[ElementSummary] = Field(default_factory=list)
    accumulator: Optional[AccumulatorSummary] = None
    detector: Optional[DetectorSummary] = None
    shaper_analysis: Optional[Dict[str, Any]] = None
    metastability: List[MetastabilityEntry] = Field(default_factory=list)
    diagnostics: List[DiagnosticEntry] = Field(default_factory=list)
    timing: Dict[str, Any] = Field(default_factory=dict)
    mtbf_seconds: Optional[float] = Field(None, description="Synchronizer MTBF of the chain, null if it overflows a float")
    mtbf_log10_seconds: Optional[float] = Field(None, description="Base-10 logarithm of the MTBF")
    artifacts: Dict[str, str] = Field(default_factory=dict)


class Histogram(BaseModel):
    edges: List[float] = Field(default_factory=list)
    counts: List[int] = Field(default_factory=list)


class SweepRun(BaseModel):
    key: Union[int, float]
    seed: int
    epsilon: float
    onset: Optional[int] = None
    passed: bool
    finding_counts: Dict[str, int] = Field(default_factory=dict)
    cases: Dict[str, int] = Field(default_factory=dict)
    fractional_delays: List[int] = Field(default_factory=list)
    resolution_delays: List[int] = Field(default_factory=list)


class SweepReport(BaseModel):
    """Aggregate of independent runs, sorted by sweep key."""
    schema_version: int = REPORT_SCHEMA_VERSION
    scenario: str
    scenario_hash: str
    sweep: str = Field(..., description="seeds, epsilon, onset or resolution")
    runs: List[SweepRun] = Field(default_factory=list)
    passed: int = 0
    failed: int = 0
    pass_matrix: Dict[str, bool] = Field(default_factory=dict)
    finding_counts: Dict[str, int] = Field(default_factory=dict)
    case_counts: Dict[str, int] = Field(default_factory=dict)
    fractional_delay_histogram: Histogram = Field(default_factory=Histogram)
    fractional_delay_range: Optional[List[int]] = None
    resolution_delay_histogram: Histogram = Field(default_factory=Histogram)
    resolution_delay_mean: Optional[float] = None
    first_failing_epsilon: Optional[float] = None

    @property
    def all_passed(self) -> bool:
        return self.failed == 0
