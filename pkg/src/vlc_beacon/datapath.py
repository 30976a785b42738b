"""Cycle-level model of the centralized VLC transmitter

- Requests FIFO and Address Pointer - buffer update requests from the host
  and hand one at a time to the encoder
- Message memory - two ports, port A written by the host side, port B read by
  the Address Pointer. Writes commit at the end of a cycle, so a same-cycle
  read of the same address returns the old value
- VLC Transmitter - polar + RLL encode with a fixed request-to-load latency
- De-multiplexer and front-end registers - the encoded frame is staged in the
  buffer register of the anchor selected by the memory-read address
- PISO shift registers - loop the active frame in the sr_clk domain and pick
  up a staged frame at the next frame boundary

One call to :func:`step_sys` advances one sys_clk tick. Within a tick the
order is: admit scheduled requests, advance in-flight requests, dequeue,
commit memory writes, then shift the PISO registers on an sr_clk edge.
"""
import heapq
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from itertools import count
from logging import getLogger
from os import makedirs
from os.path import join
from typing import Deque, Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from .coding import receive_pipeline, transmit_pipeline
from .errors import BackpressureError, InvalidAddressError, InvalidParametersError
from .models import (
    BitBlock,
    LineCodedFrame,
    NetworkConfig,
    PolarCodeConfig,
    RllScheme,
    UpdateRequest,
)

logger = getLogger(__name__)

BYTES_PER_ANCHOR = 16

# Fmax and throughput reported for the two synthesized transmitters
REPORTED_FMAX_HZ = {
    RllScheme.MANCHESTER: 76.13e6,
    RllScheme.FOUR_B_SIX_B: 69.69e6,
}
REPORTED_THROUGHPUT_BPS = {
    RllScheme.MANCHESTER: 694.8e6,
    RllScheme.FOUR_B_SIX_B: 630.8e6,
}

EVENT_COLUMNS = ["cycle", "event", "anchor", "detail"]


class EventKind(str, Enum):
    ENQUEUE = "enqueue"
    DEQUEUE = "dequeue"
    MEM_WRITE = "mem_write"
    MEM_READ = "mem_read"
    ENCODE_START = "encode_start"
    FE_LOAD = "fe_load"
    PISO_WRAP = "piso_wrap"
    ERROR = "error"


@dataclass(frozen=True)
class Event:
    cycle: int
    event: EventKind
    anchor: Optional[int]
    detail: str = ""


class MessageMemory:
    """Dual port message memory holding one 128-bit cell per anchor"""

    def __init__(self, front_ends: int) -> None:
        self.capacity = front_ends * BYTES_PER_ANCHOR
        self.cells: List[int] = [0] * front_ends
        self._pending: List[Tuple[int, int]] = []

    def write(self, address: int, value: int) -> None:
        """Port A, visible after :meth:`commit`"""
        self._check(address)
        self._pending.append((address, value))

    def read(self, address: int) -> int:
        """Port B"""
        self._check(address)
        return self.cells[address]

    def commit(self) -> None:
        for address, value in self._pending:
            self.cells[address] = value
        self._pending.clear()

    def _check(self, address: int) -> None:
        if not 0 <= address < len(self.cells):
            raise InvalidAddressError(address, len(self.cells))


@dataclass
class FrontEnd:
    id: int
    piso: np.ndarray
    position: int = 0
    output_line: int = 0
    buffer_reg: Optional[LineCodedFrame] = None
    buffer_message: Optional[BitBlock] = None
    active_message: Optional[BitBlock] = None
    loaded_frame: Optional[LineCodedFrame] = None

    def shift(self) -> bool:
        """Drive the current bit and advance, returns True on a frame wrap"""
        self.output_line = int(self.piso[self.position])
        self.position += 1
        if self.position < len(self.piso):
            return False
        self.position = 0
        if self.buffer_reg is not None:
            self.piso = self.buffer_reg.bits.bits
            self.active_message = self.buffer_message
            self.buffer_reg = None
            self.buffer_message = None
        return True


@dataclass
class InFlight:
    request: UpdateRequest
    dequeue_cycle: int
    elapsed: int = 0
    message: Optional[BitBlock] = None
    frame: Optional[LineCodedFrame] = None


@dataclass
class TransmitterUnit:
    latency: int = 14
    overlap: bool = False
    jobs: Deque[InFlight] = field(default_factory=deque)

    @property
    def busy(self) -> bool:
        return bool(self.jobs)

    @property
    def pipeline_counter(self) -> int:
        if not self.jobs:
            return 0
        return self.latency - self.jobs[0].elapsed

    def can_accept(self) -> bool:
        return self.overlap or not self.jobs


@dataclass
class SimState:
    network: NetworkConfig
    polar: PolarCodeConfig
    memory: MessageMemory
    tx: TransmitterUnit
    front_ends: List[FrontEnd]
    cycle: int = 0
    sr_ticks: int = 0
    fifo: Deque[UpdateRequest] = field(default_factory=deque)
    event_log: List[Event] = field(default_factory=list)
    overflowed: List[UpdateRequest] = field(default_factory=list)
    _scheduled: List[Tuple[int, int, UpdateRequest]] = field(default_factory=list)
    _sequence: "count[int]" = field(default_factory=count)

    @property
    def frame_length(self) -> int:
        return self.network.scheme.frame_length(self.polar.N)

    @property
    def divider(self) -> int:
        return self.network.clock.divider

    def log(self, kind: EventKind, anchor: Optional[int] = None, detail: str = "") -> None:
        self.event_log.append(Event(self.cycle, kind, anchor, detail))


def create_state(network: NetworkConfig, polar: PolarCodeConfig) -> SimState:
    """Build a simulator in its reset state: memory, registers and lines at zero"""
    if polar.N != network.cl or polar.K != network.ml:
        raise InvalidParametersError(
            f"Polar code (N={polar.N}, K={polar.K}) does not match the network "
            + f"(cl={network.cl}, ml={network.ml})"
        )
    frame_length = network.scheme.frame_length(polar.N)
    front_ends = [
        FrontEnd(id=i, piso=np.zeros(frame_length, dtype=np.uint8))
        for i in range(network.front_ends)
    ]
    return SimState(
        network=network,
        polar=polar,
        memory=MessageMemory(network.front_ends),
        tx=TransmitterUnit(latency=network.latency_cycles, overlap=network.overlap),
        front_ends=front_ends,
    )


def enqueue_request(
    state: SimState, req: UpdateRequest, at_cycle: Optional[int] = None
) -> SimState:
    """Post a request that enters the FIFO at the start of tick ``at_cycle``"""
    at_cycle = state.cycle if at_cycle is None else at_cycle
    if at_cycle < state.cycle:
        raise InvalidParametersError(
            f"Cannot enqueue at cycle {at_cycle}, the simulation is at {state.cycle}"
        )
    if req.address >= state.network.front_ends:
        state.log(EventKind.ERROR, req.address, "invalid_address")
        raise InvalidAddressError(req.address, state.network.front_ends)
    heapq.heappush(state._scheduled, (at_cycle, next(state._sequence), req))
    return state


def _admit(state: SimState) -> None:
    while state._scheduled and state._scheduled[0][0] <= state.cycle:
        _, _, req = heapq.heappop(state._scheduled)
        if len(state.fifo) >= state.network.fifo_depth:
            state.overflowed.append(req)
            state.log(EventKind.ERROR, req.address, "backpressure")
            logger.warning(
                f"FIFO full at cycle {state.cycle}, request for anchor {req.address} refused"
            )
            continue
        state.fifo.append(req)
        state.log(EventKind.ENQUEUE, req.address, f"depth={len(state.fifo)}")


def _advance(state: SimState) -> None:
    tx = state.tx
    ml = state.network.ml
    for job in list(tx.jobs):
        job.elapsed += 1
        address = job.request.address
        if job.elapsed == 1:
            value = state.memory.read(address)
            job.message = BitBlock.from_int(value & ((1 << ml) - 1), ml)
            state.log(EventKind.MEM_READ, address)
        elif job.elapsed == 2:
            job.frame = transmit_pipeline(job.message, state.polar, state.network.scheme)
            state.log(EventKind.ENCODE_START, address)
        if job.elapsed == tx.latency:
            front_end = state.front_ends[address]
            front_end.buffer_reg = job.frame
            front_end.buffer_message = job.message
            front_end.loaded_frame = job.frame
            tx.jobs.remove(job)
            state.log(
                EventKind.FE_LOAD,
                address,
                f"latency={state.cycle - job.dequeue_cycle}",
            )


def _dequeue(state: SimState) -> None:
    if not state.fifo or not state.tx.can_accept():
        return
    req = state.fifo.popleft()
    state.log(EventKind.DEQUEUE, req.address, f"remaining={len(state.fifo)}")
    if req.write_flag:
        state.memory.write(req.address, req.payload)
        state.log(EventKind.MEM_WRITE, req.address, format(req.payload, "032x"))
    state.tx.jobs.append(InFlight(req, state.cycle))


def _shift(state: SimState) -> None:
    state.sr_ticks += 1
    for front_end in state.front_ends:
        staged = front_end.buffer_reg is not None
        if front_end.shift():
            state.log(
                EventKind.PISO_WRAP, front_end.id, "loaded" if staged else "repeat"
            )


def step_sys(state: SimState) -> SimState:
    _admit(state)
    _advance(state)
    _dequeue(state)
    state.memory.commit()
    if (state.cycle + 1) % state.divider == 0:
        _shift(state)
    state.cycle += 1
    return state


def _next_event_cycle(state: SimState, limit: int) -> int:
    """First cycle at or after the current one where anything can change"""
    if state.tx.jobs or state.fifo:
        return state.cycle
    divider = state.divider
    candidate = state.cycle + (divider - 1 - state.cycle % divider)
    if state._scheduled:
        candidate = min(candidate, state._scheduled[0][0])
    return min(candidate, limit)


def run_until(state: SimState, cycle: int) -> SimState:
    """Step the simulator until ``state.cycle == cycle``

    Idle stretches with no request in the FIFO or in flight are skipped in one
    jump to the next sr_clk edge or scheduled arrival.
    """
    if cycle < state.cycle:
        raise InvalidParametersError(
            f"Cannot run back to cycle {cycle} from cycle {state.cycle}"
        )
    while state.cycle < cycle:
        state.cycle = _next_event_cycle(state, cycle)
        if state.cycle < cycle:
            step_sys(state)
    return state


def run_until_idle(state: SimState) -> SimState:
    """Run until every scheduled request has been loaded into its front-end"""
    while state._scheduled or state.fifo or state.tx.jobs:
        if not state.fifo and not state.tx.jobs:
            run_until(state, max(state.cycle, state._scheduled[0][0]))
        step_sys(state)
    return state


def run_to_frame_boundary(state: SimState) -> SimState:
    """Advance to the first cycle after the next PISO wrap

    Frames staged before the call are active afterwards.
    """
    remaining = state.frame_length - state.sr_ticks % state.frame_length
    edges_cycle = (state.sr_ticks + remaining) * state.divider
    return run_until(state, max(edges_cycle, state.cycle))


@dataclass(frozen=True)
class WaveformCapture:
    """OOK samples of a set of anchors, one per sr_clk tick

    ``offset`` is the index of the first sample that starts a frame.
    """

    start_sr_tick: int
    frame_length: int
    waveforms: Dict[int, BitBlock]

    @property
    def offset(self) -> int:
        return (-self.start_sr_tick) % self.frame_length


def capture_waveforms(
    state: SimState, sr_ticks: int, anchors: Optional[Iterable[int]] = None
) -> WaveformCapture:
    """Run the simulator for ``sr_ticks`` sr_clk periods sampling output lines"""
    if anchors is None:
        selected = list(range(state.network.front_ends))
    else:
        selected = list(anchors)
    for anchor in selected:
        if not 0 <= anchor < state.network.front_ends:
            raise InvalidAddressError(anchor, state.network.front_ends)
    start = state.sr_ticks
    samples = np.zeros((len(selected), sr_ticks), dtype=np.uint8)
    for tick in range(sr_ticks):
        run_until(state, (state.sr_ticks + 1) * state.divider)
        for row, anchor in enumerate(selected):
            samples[row, tick] = state.front_ends[anchor].output_line
    waveforms = {anchor: BitBlock(samples[row]) for row, anchor in enumerate(selected)}
    return WaveformCapture(start, state.frame_length, waveforms)


def sample_waveform(state: SimState, anchor: int, sr_ticks: int) -> BitBlock:
    return capture_waveforms(state, sr_ticks, [anchor]).waveforms[anchor]


def receive_and_decode(
    waveform: BitBlock, config: PolarCodeConfig, scheme: RllScheme, frame_offset: int = 0
) -> BitBlock:
    """Slice one frame from a sampled waveform and decode the message"""
    frame_length = scheme.frame_length(config.N)
    if frame_offset < 0 or frame_offset + frame_length > waveform.length:
        raise InvalidParametersError(
            f"Waveform of {waveform.length} samples holds no frame at offset {frame_offset}"
        )
    bits = waveform.bits[frame_offset : frame_offset + frame_length]
    return receive_pipeline(LineCodedFrame(scheme, BitBlock(bits)), config)


def report_throughput(config: PolarCodeConfig, latency: int, fmax_hz: float) -> float:
    """Message bits per second at one request per ``latency`` cycles of fmax"""
    if latency < 1:
        raise InvalidParametersError(f"Latency must be >= 1 cycle, got {latency}")
    return config.K * fmax_hz / latency


@dataclass(frozen=True)
class Verification:
    anchor: int
    loaded: bool
    expected: Optional[BitBlock]
    decoded: Optional[BitBlock]
    match: bool


def verify_waveforms(state: SimState, capture: WaveformCapture) -> List[Verification]:
    """Decode every captured waveform and compare with the active message

    Anchors that were never loaded must stay at the all-zero reset level.
    """
    results = []
    for anchor, waveform in capture.waveforms.items():
        expected = state.front_ends[anchor].active_message
        if expected is None:
            results.append(
                Verification(anchor, False, None, None, waveform.count_ones() == 0)
            )
            continue
        try:
            decoded = receive_and_decode(
                waveform, state.polar, state.network.scheme, capture.offset
            )
        except ValueError as ex:
            logger.error(f"Anchor {anchor} waveform failed to decode: {ex}")
            decoded = None
        results.append(Verification(anchor, True, expected, decoded, decoded == expected))
    return results


def event_log_frame(state: SimState) -> pd.DataFrame:
    rows = [
        (event.cycle, event.event.value, event.anchor, event.detail)
        for event in state.event_log
    ]
    frame = pd.DataFrame(rows, columns=EVENT_COLUMNS)
    frame["anchor"] = frame["anchor"].astype("Int64")
    return frame


def write_event_log(state: SimState, path: str) -> None:
    event_log_frame(state).to_csv(path, index=False, lineterminator="\n")


def write_waveforms(capture: WaveformCapture, out_dir: str) -> List[str]:
    """Write one ``fe_<id>.bits`` file per captured anchor"""
    makedirs(out_dir, exist_ok=True)
    paths = []
    for anchor, waveform in capture.waveforms.items():
        path = join(out_dir, f"fe_{anchor}.bits")
        with open(path, "w", encoding="ascii", newline="\n") as bits_file:
            bits_file.write(waveform.to_string() + "\n")
        paths.append(path)
    return paths


def back_to_back(
    state: SimState, requests: Iterable[UpdateRequest], start: int = 0, gap: int = 0
) -> SimState:
    """Schedule requests ``gap`` cycles apart starting at ``start``"""
    for i, req in enumerate(requests):
        enqueue_request(state, req, start + i * gap)
    return state


def require_no_overflow(state: SimState) -> None:
    if state.overflowed:
        raise BackpressureError(
            f"{len(state.overflowed)} requests refused by a full FIFO "
            + f"of depth {state.network.fifo_depth}"
        )
