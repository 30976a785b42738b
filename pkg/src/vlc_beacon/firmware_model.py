"""Sequential central-processor baseline

A single controller runs the whole transmitter procedure once per anchor,
one anchor after another. The loop below follows the firmware line by line so
its operations can be counted; :mod:`vlc_beacon.coding` produces the same
frames with vectorised numpy code.
"""
import threading
from dataclasses import dataclass, field
from logging import getLogger
from statistics import median
from time import perf_counter
from typing import Callable, List, Optional, Sequence, Tuple

import pandas as pd
from tqdm import tqdm

from .coding import FOUR_B_SIX_B_TABLE
from .errors import EmptyReportError, InvalidParametersError
from .models import SUPPORTED_LENGTHS, BitBlock, LineCodedFrame, PolarCodeConfig, RllScheme
from .utils import linear_fit

logger = getLogger(__name__)

MEASURED = "measured"
MODELED = "modeled"

DEFAULT_WARMUP = 10
DEFAULT_REPETITIONS = 30

# Arduino Uno SRAM
DEFAULT_BUDGET_BYTES = 2048

FOOTPRINT_COLUMNS = ["ml", "cl", "scheme", "array_bytes", "overhead", "total"]

# Measured timings must not overlap with each other
_TIMING_LOCK = threading.Lock()


@dataclass(frozen=True)
class CostModel:
    """Converts instrumented operation counts into a delay

    In measured mode the unit costs are ignored and wall-clock time is used.
    ``calibration_scale`` turns abstract units into seconds.
    """

    mode: str = MODELED
    cost_per_xor: float = 1.0
    cost_per_table_lookup: float = 1.0
    cost_per_bit_move: float = 1.0
    calibration_scale: Optional[float] = None
    warmup: int = DEFAULT_WARMUP
    repetitions: int = DEFAULT_REPETITIONS

    def __post_init__(self) -> None:
        if self.mode not in (MEASURED, MODELED):
            raise InvalidParametersError(f"Unknown cost model mode '{self.mode}'")
        costs = (self.cost_per_xor, self.cost_per_table_lookup, self.cost_per_bit_move)
        if min(costs) < 0:
            raise InvalidParametersError("Unit costs must be >= 0")
        if self.calibration_scale is not None and self.calibration_scale <= 0:
            raise InvalidParametersError("The calibration scale must be positive")
        if self.warmup < 0 or self.repetitions < 1:
            raise InvalidParametersError("Need warmup >= 0 and repetitions >= 1")

    @property
    def unit(self) -> str:
        if self.mode == MEASURED or self.calibration_scale is not None:
            return "seconds"
        return "units"


@dataclass
class OpCounts:
    xors: int = 0
    table_lookups: int = 0
    bit_moves: int = 0

    def __add__(self, other: "OpCounts") -> "OpCounts":
        return OpCounts(
            self.xors + other.xors,
            self.table_lookups + other.table_lookups,
            self.bit_moves + other.bit_moves,
        )

    def cost(self, model: CostModel) -> float:
        units = (
            self.xors * model.cost_per_xor
            + self.table_lookups * model.cost_per_table_lookup
            + self.bit_moves * model.cost_per_bit_move
        )
        if model.calibration_scale is not None:
            return units * model.calibration_scale
        return units


def algorithm_one(
    message: BitBlock,
    config: PolarCodeConfig,
    scheme: RllScheme,
    counts: Optional[OpCounts] = None,
) -> LineCodedFrame:
    """One transmitter's procedure written as the firmware loops"""
    if message.length != config.K:
        raise InvalidParametersError(
            f"Message has {message.length} bits, the code carries K = {config.K}"
        )
    N = config.N
    n = config.n
    mes = message.bits.tolist()
    frozen = config.frozen
    if counts is None:
        counts = OpCounts()

    polar_en = [0] * N
    bit_index = 0
    for c in range(N):
        if c in frozen:
            polar_en[c] = 0
        else:
            polar_en[c] = mes[bit_index]
            bit_index += 1
        counts.bit_moves += 1

    for i in range(n):
        b = 1 << (n - i)
        nb = 1 << i
        bdiv2 = b // 2
        for j in range(nb):
            base = j * b
            for t in range(bdiv2):
                polar_en[base + t] ^= polar_en[base + t + bdiv2]
                counts.xors += 1

    if scheme is RllScheme.MANCHESTER:
        out = [0] * (2 * N)
        for z in range(0, 2 * N, 2):
            if polar_en[z // 2] == 1:
                out[z] = 1
                out[z + 1] = 0
            else:
                out[z] = 0
                out[z + 1] = 1
            counts.bit_moves += 2
    else:
        if N % 4:
            raise InvalidParametersError(f"4B6B needs N divisible by 4, got {N}")
        out = [0] * (3 * N // 2)
        x = 0
        for z in range(0, 3 * N // 2, 6):
            nibble = (
                (polar_en[x + 3] << 3)
                | (polar_en[x + 2] << 2)
                | (polar_en[x + 1] << 1)
                | polar_en[x]
            )
            word = FOUR_B_SIX_B_TABLE[nibble]
            counts.table_lookups += 1
            for bit in range(6):
                out[z + bit] = (word >> bit) & 1
            counts.bit_moves += 6
            x += 4
    return LineCodedFrame(scheme, BitBlock(out))


def operation_counts(config: PolarCodeConfig, scheme: RllScheme) -> OpCounts:
    """Operations of one transmitter's procedure for the given code"""
    counts = OpCounts()
    algorithm_one(BitBlock.zeros(config.K), config, scheme, counts)
    return counts


@dataclass(frozen=True)
class DelayRow:
    k: int
    delay: float
    frames: Tuple[LineCodedFrame, ...] = field(default=(), compare=False, repr=False)


def _time_once(
    messages: Sequence[BitBlock], config: PolarCodeConfig, scheme: RllScheme
) -> Tuple[float, List[LineCodedFrame]]:
    start = perf_counter()
    frames = [algorithm_one(message, config, scheme) for message in messages]
    return perf_counter() - start, frames


def run_sequential(
    k: int,
    messages: Sequence[BitBlock],
    config: PolarCodeConfig,
    scheme: RllScheme,
    cost: CostModel,
) -> DelayRow:
    """Run the transmitter procedure for ``k`` anchors one after another

    Measured mode reports the median wall-clock time of ``cost.repetitions``
    runs after ``cost.warmup`` discarded runs. Modeled mode sums the
    instrumented operation counts of every run and prices them with the
    unit costs.
    """
    if k == 0:
        raise EmptyReportError("A sequential run needs at least one transmitter")
    if k < 0 or len(messages) != k:
        raise InvalidParametersError(f"Expected {k} messages, got {len(messages)}")

    if cost.mode == MODELED:
        total = OpCounts()
        frames = []
        for message in messages:
            counts = OpCounts()
            frames.append(algorithm_one(message, config, scheme, counts))
            total = total + counts
        return DelayRow(k, total.cost(cost), tuple(frames))

    with _TIMING_LOCK:
        for _ in range(cost.warmup):
            _time_once(messages, config, scheme)
        timings = []
        for _ in range(cost.repetitions):
            elapsed, frames = _time_once(messages, config, scheme)
            timings.append(elapsed)
    delay = median(timings)
    logger.debug(f"Measured k={k}: median {delay:.6f} s over {cost.repetitions} runs")
    return DelayRow(k, delay, tuple(frames))


@dataclass
class DelayReport:
    rows: List[DelayRow]
    ml: int
    scheme: RllScheme
    model_label: str
    unit: str = "units"

    def __post_init__(self) -> None:
        self.rows = sorted(self.rows, key=lambda row: row.k)
        if any(row.delay < 0 for row in self.rows):
            raise InvalidParametersError("Delays must be >= 0")

    @property
    def column(self) -> str:
        return f"delay_{self.unit}"

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(row.k, row.delay) for row in self.rows], columns=["k", self.column]
        )

    def write_csv(self, path: str) -> None:
        self.to_frame().to_csv(path, index=False, lineterminator="\n", float_format="%.17g")

    def fit(self) -> Tuple[float, float, float]:
        """Slope, intercept and R^2 of delay against k"""
        return linear_fit([row.k for row in self.rows], [row.delay for row in self.rows])


def sequential_report(
    k_values: Sequence[int],
    messages_for: Callable[[int], Sequence[BitBlock]],
    config: PolarCodeConfig,
    scheme: RllScheme,
    cost: CostModel,
    progress: bool = False,
) -> DelayReport:
    """Baseline delay for every transmitter count in ``k_values``"""
    if not k_values:
        raise EmptyReportError("No transmitter counts given")
    rows = []
    for k in tqdm(k_values, desc=f"sequential ({cost.mode})", disable=not progress):
        rows.append(run_sequential(k, messages_for(k), config, scheme, cost))
    label = f"firmware_{cost.mode}"
    return DelayReport(rows, config.K, scheme, label, cost.unit)


@dataclass(frozen=True)
class FootprintReport:
    ml: int
    cl: int
    scheme: RllScheme
    array_bytes: int
    overhead_bytes: int = 0
    budget_bytes: int = DEFAULT_BUDGET_BYTES

    @property
    def total(self) -> int:
        return self.array_bytes + self.overhead_bytes

    @property
    def budget_percent(self) -> float:
        return 100.0 * self.total / self.budget_bytes


def estimate_footprint(
    ml: int,
    cl: int,
    scheme: RllScheme,
    overhead_bytes: int = 0,
    budget_bytes: int = DEFAULT_BUDGET_BYTES,
) -> FootprintReport:
    """Bytes of the firmware's arrays at one byte per element

    Counts the message, the frozen index map, the codeword and the output
    array of one transmitter.
    """
    if (ml, cl) not in SUPPORTED_LENGTHS:
        raise InvalidParametersError(
            f"(ml, cl) = ({ml}, {cl}) is not one of {SUPPORTED_LENGTHS}"
        )
    if overhead_bytes < 0 or budget_bytes <= 0:
        raise InvalidParametersError("Overhead must be >= 0 and the budget positive")
    array_bytes = ml + cl + cl + scheme.frame_length(cl)
    return FootprintReport(ml, cl, scheme, array_bytes, overhead_bytes, budget_bytes)


def footprint_table(
    schemes: Sequence[RllScheme] = (RllScheme.MANCHESTER, RllScheme.FOUR_B_SIX_B),
    overhead_bytes: int = 0,
    budget_bytes: int = DEFAULT_BUDGET_BYTES,
) -> pd.DataFrame:
    rows = []
    for ml, cl in SUPPORTED_LENGTHS:
        for scheme in schemes:
            report = estimate_footprint(ml, cl, scheme, overhead_bytes, budget_bytes)
            rows.append(
                (ml, cl, scheme.value, report.array_bytes, report.overhead_bytes, report.total)
            )
    return pd.DataFrame(rows, columns=FOOTPRINT_COLUMNS)


def write_footprint_csv(reports: Sequence[FootprintReport], path: str) -> None:
    rows = [
        (r.ml, r.cl, r.scheme.value, r.array_bytes, r.overhead_bytes, r.total)
        for r in reports
    ]
    pd.DataFrame(rows, columns=FOOTPRINT_COLUMNS).to_csv(
        path, index=False, lineterminator="\n"
    )
