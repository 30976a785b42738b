"""Compare the sequential firmware baseline with the centralized transmitter

For every transmitter count k the baseline runs the transmitter procedure k
times in a row, and the datapath simulator processes k update requests
enqueued back to back. Both delays are in seconds: simulator cycles are
divided by sys_hz, the baseline is wall-clock time (measured mode) or priced
operation counts (modeled mode, seconds only when a calibration scale is set).
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from logging import getLogger
from os import makedirs
from os.path import join
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from .datapath import (
    REPORTED_FMAX_HZ,
    REPORTED_THROUGHPUT_BPS,
    EventKind,
    back_to_back,
    create_state,
    require_no_overflow,
    run_until_idle,
)
from .errors import InvalidParametersError
from .firmware_model import (
    MODELED,
    CostModel,
    DelayReport,
    DelayRow,
    run_sequential,
)
from .models import (
    BitBlock,
    ClockConfig,
    FrozenSource,
    NetworkConfig,
    PolarCodeConfig,
    RllScheme,
    UpdateRequest,
)
from .parser import polar_config_for

logger = getLogger(__name__)

DEFAULT_K_VALUES = (1, 3, 5, 10, 20, 50, 100)

# FPGA/Arduino and FPGA/Raspberry gains reported at ML = 128
REPORTED_GAINS: Dict[int, Tuple[int, int]] = {
    1: (2729, 548),
    3: (3969, 738),
    5: (4609, 966),
    10: (4610, 850),
    20: (4465, 985),
    50: (4375, 802),
    100: (4359, 789),
}

GAIN_COLUMNS = [
    "k",
    "baseline_delay",
    "centralized_delay",
    "gain",
    "centralized_cycles",
    "frames_match",
    "reported_arduino_gain",
    "reported_raspberry_gain",
]


@dataclass(frozen=True)
class Scenario:
    k_values: Tuple[int, ...] = DEFAULT_K_VALUES
    ml: int = 128
    cl: int = 256
    scheme: RllScheme = RllScheme.MANCHESTER
    clock: ClockConfig = field(default_factory=ClockConfig)
    latency_cycles: int = 14
    front_ends: int = 100
    fifo_depth: int = 128
    mode: str = MODELED
    repetitions: int = 30
    warmup: int = 10
    calibration_scale: Optional[float] = None
    inter_arrival_gap: int = 0
    erasure: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        k_values = tuple(int(k) for k in self.k_values)
        object.__setattr__(self, "k_values", k_values)
        if not k_values:
            raise InvalidParametersError("A scenario needs at least one k")
        if list(k_values) != sorted(set(k_values)):
            raise InvalidParametersError(f"k values must be strictly ascending: {k_values}")
        if k_values[0] < 1:
            raise InvalidParametersError(f"k values must be >= 1: {k_values}")
        if k_values[-1] > self.front_ends:
            raise InvalidParametersError(
                f"k = {k_values[-1]} exceeds the {self.front_ends} front-ends"
            )
        if self.inter_arrival_gap < 0:
            raise InvalidParametersError("The inter-arrival gap must be >= 0")
        # raises on invalid combinations
        self.network()
        self.cost_model()

    def network(self) -> NetworkConfig:
        return NetworkConfig(
            front_ends=self.front_ends,
            ml=self.ml,
            cl=self.cl,
            scheme=self.scheme,
            sys_hz=self.clock.sys_hz,
            sr_hz=self.clock.sr_hz,
            latency_cycles=self.latency_cycles,
            fifo_depth=self.fifo_depth,
            frozen_source=FrozenSource("bec", erasure=self.erasure),
        )

    def cost_model(self) -> CostModel:
        return CostModel(
            mode=self.mode,
            calibration_scale=self.calibration_scale,
            warmup=self.warmup,
            repetitions=self.repetitions,
        )

    def messages(self) -> List[BitBlock]:
        rng = np.random.default_rng(self.seed)
        return [BitBlock.random(self.ml, rng) for _ in range(self.k_values[-1])]


@dataclass(frozen=True)
class GainRow:
    k: int
    baseline_delay: float
    centralized_delay: float
    gain: float
    centralized_cycles: int
    frames_match: bool
    reported_arduino_gain: Optional[int] = None
    reported_raspberry_gain: Optional[int] = None


@dataclass
class GainTable:
    rows: List[GainRow]
    baseline_unit: str = "seconds"

    def __post_init__(self) -> None:
        if any(row.gain <= 0 for row in self.rows):
            raise InvalidParametersError("Gains must be positive")

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([asdict(row) for row in self.rows], columns=GAIN_COLUMNS)
        for column in ("reported_arduino_gain", "reported_raspberry_gain"):
            frame[column] = frame[column].astype("Int64")
        return frame

    def write_csv(self, path: str) -> None:
        self.to_frame().to_csv(path, index=False, lineterminator="\n", float_format="%.17g")


def _optional_int(value) -> Optional[int]:
    return None if pd.isna(value) else int(value)


def read_gain_table(path: str, baseline_unit: str = "seconds") -> GainTable:
    frame = pd.read_csv(path)
    rows = [
        GainRow(
            k=int(row.k),
            baseline_delay=float(row.baseline_delay),
            centralized_delay=float(row.centralized_delay),
            gain=float(row.gain),
            centralized_cycles=int(row.centralized_cycles),
            frames_match=bool(row.frames_match),
            reported_arduino_gain=_optional_int(row.reported_arduino_gain),
            reported_raspberry_gain=_optional_int(row.reported_raspberry_gain),
        )
        for row in frame.itertuples(index=False)
    ]
    return GainTable(rows, baseline_unit)


@dataclass(frozen=True)
class CentralizedRun:
    k: int
    cycles: int
    delay: float
    load_latencies: Tuple[int, ...]
    frames: Tuple = ()


def run_centralized(
    k: int,
    messages: Sequence[BitBlock],
    network: NetworkConfig,
    polar: PolarCodeConfig,
    gap: int = 0,
) -> CentralizedRun:
    """Simulate k update requests to anchors 0..k-1, enqueued ``gap`` cycles apart

    The delay runs from the first arrival to the last front-end load.
    """
    if k > network.front_ends:
        raise InvalidParametersError(f"k = {k} exceeds the {network.front_ends} front-ends")
    state = create_state(network, polar)
    requests = [UpdateRequest.for_message(i, messages[i]) for i in range(k)]
    back_to_back(state, requests, start=0, gap=gap)
    run_until_idle(state)
    require_no_overflow(state)

    dequeued = {}
    latencies = []
    last_load = 0
    for event in state.event_log:
        if event.event is EventKind.DEQUEUE:
            dequeued[event.anchor] = event.cycle
        elif event.event is EventKind.FE_LOAD:
            latencies.append(event.cycle - dequeued[event.anchor])
            last_load = max(last_load, event.cycle)
    frames = tuple(state.front_ends[i].loaded_frame for i in range(k))
    return CentralizedRun(
        k, last_load, last_load / network.sys_hz, tuple(latencies), frames
    )


def _write_manifest(path: str, scenario: Scenario, polar: PolarCodeConfig, unit: str) -> None:
    lines = []
    for key, value in asdict(scenario).items():
        if isinstance(value, RllScheme):
            value = value.value
        lines.append(f"{key} = {value}")
    lines += [
        f"frozen = {','.join(str(i) for i in sorted(polar.frozen))}",
        f"baseline_unit = {unit}",
        "centralized_unit = seconds (cycles / sys_hz)",
        "reported_gains = FPGA/Arduino and FPGA/Raspberry at ML = 128, hardware measured",
        f"reported_fmax_hz = {REPORTED_FMAX_HZ[scenario.scheme]}",
        f"reported_throughput_bps = {REPORTED_THROUGHPUT_BPS[scenario.scheme]}",
    ]
    with open(path, "w", encoding="utf-8", newline="\n") as manifest:
        manifest.write("\n".join(lines) + "\n")


def run_scenario(
    s: Scenario, out_dir: Optional[str] = None, progress: bool = False
) -> GainTable:
    """Gain of the centralized transmitter over the baseline for every k

    Writes ``delays_<model>.csv``, ``delays_centralized.csv``, ``gains.csv``
    and ``manifest.txt`` when ``out_dir`` is given.
    """
    network = s.network()
    polar = polar_config_for(network)
    cost = s.cost_model()
    messages = s.messages()

    baseline_rows: List[DelayRow] = []
    centralized_rows: List[DelayRow] = []
    gains: List[GainRow] = []
    for k in tqdm(s.k_values, desc=f"scenario ({s.mode})", disable=not progress):
        baseline = run_sequential(k, messages[:k], polar, s.scheme, cost)
        centralized = run_centralized(k, messages, network, polar, s.inter_arrival_gap)
        frames_match = list(baseline.frames) == list(centralized.frames)
        if not frames_match:
            logger.error(f"Baseline and centralized frames differ at k={k}")
        reported = REPORTED_GAINS.get(k) if s.ml == 128 else None
        gains.append(
            GainRow(
                k=k,
                baseline_delay=baseline.delay,
                centralized_delay=centralized.delay,
                gain=baseline.delay / centralized.delay,
                centralized_cycles=centralized.cycles,
                frames_match=frames_match,
                reported_arduino_gain=reported[0] if reported else None,
                reported_raspberry_gain=reported[1] if reported else None,
            )
        )
        baseline_rows.append(baseline)
        centralized_rows.append(DelayRow(k, centralized.delay))
        logger.debug(
            f"k={k}: baseline {baseline.delay:.6g} {cost.unit}, "
            + f"centralized {centralized.cycles} cycles"
        )

    table = GainTable(gains, cost.unit)
    if out_dir is not None:
        makedirs(out_dir, exist_ok=True)
        DelayReport(baseline_rows, s.ml, s.scheme, f"firmware_{s.mode}", cost.unit).write_csv(
            join(out_dir, f"delays_firmware_{s.mode}.csv")
        )
        DelayReport(centralized_rows, s.ml, s.scheme, "centralized", "seconds").write_csv(
            join(out_dir, "delays_centralized.csv")
        )
        table.write_csv(join(out_dir, "gains.csv"))
        _write_manifest(join(out_dir, "manifest.txt"), s, polar, cost.unit)
        logger.info(f"Wrote benchmark results to {out_dir}")
    return table


def run_scenarios(
    scenarios: Sequence[Scenario],
    out_dirs: Optional[Sequence[Optional[str]]] = None,
    max_workers: int = 4,
) -> List[GainTable]:
    """Run independent scenarios concurrently

    Measured timings still run one at a time.
    """
    if out_dirs is None:
        out_dirs = [None] * len(scenarios)
    if len(out_dirs) != len(scenarios):
        raise InvalidParametersError("Need one output directory per scenario")
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = [
            pool.submit(run_scenario, scenario, out_dir)
            for scenario, out_dir in zip(scenarios, out_dirs)
        ]
        return [future.result() for future in futures]
