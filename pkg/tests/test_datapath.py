import os

import pandas as pd
import pytest

from vlc_beacon.coding import transmit_pipeline
from vlc_beacon.datapath import (
    REPORTED_FMAX_HZ,
    REPORTED_THROUGHPUT_BPS,
    EventKind,
    MessageMemory,
    back_to_back,
    capture_waveforms,
    create_state,
    enqueue_request,
    receive_and_decode,
    report_throughput,
    run_to_frame_boundary,
    run_until,
    run_until_idle,
    sample_waveform,
    step_sys,
    verify_waveforms,
    write_event_log,
    write_waveforms,
)
from vlc_beacon.errors import (
    InvalidAddressError,
    InvalidParametersError,
    LineCodeViolationError,
)
from vlc_beacon.models import (
    BitBlock,
    ClockConfig,
    NetworkConfig,
    PolarCodeConfig,
    RllScheme,
    UpdateRequest,
)
from vlc_beacon.parser import polar_config_for

from .conftest import PAIRS, SCHEMES


def events_of(state, kind):
    return [event for event in state.event_log if event.event is kind]


def random_requests(count, ml, rng, start_address=0):
    return [
        UpdateRequest.for_message(start_address + i, BitBlock.random(ml, rng))
        for i in range(count)
    ]


@pytest.fixture
def full_network():
    return NetworkConfig()


@pytest.fixture
def full_state(full_network):
    return create_state(full_network, polar_config_for(full_network))


@pytest.fixture
def small_state(small_network):
    return create_state(small_network, polar_config_for(small_network))


class TestUpdateRequest:
    def test_layout(self):
        request = UpdateRequest(1, 0b1010101, 0xABCD, 16)
        value = request.to_int()
        assert value >> 135 == 1
        assert (value >> 128) & 0x7F == 0b1010101
        assert value & ((1 << 128) - 1) == 0xABCD

    def test_seventeen_bytes(self):
        request = UpdateRequest(1, 99, (1 << 128) - 1)
        data = request.to_bytes()
        assert len(data) == 17
        assert data[0] == 0x80 | 99
        assert UpdateRequest.from_bytes(data) == request

    def test_message_in_low_order_bits(self):
        message = BitBlock.from_hex("00f1")
        request = UpdateRequest.for_message(5, message)
        assert request.payload == 0xF1
        assert request.message() == message

    def test_address_width(self):
        with pytest.raises(InvalidParametersError):
            UpdateRequest(1, 128, 0)


class TestMessageMemory:
    def test_default_capacity(self):
        assert MessageMemory(100).capacity == 1600

    def test_read_before_write(self):
        memory = MessageMemory(4)
        memory.write(2, 7)
        memory.commit()
        memory.write(2, 9)
        assert memory.read(2) == 7
        memory.commit()
        assert memory.read(2) == 9

    def test_reset_state(self):
        assert MessageMemory(3).cells == [0, 0, 0]


class TestClock:
    def test_default_divider(self):
        assert ClockConfig().divider == 500

    def test_divider_must_be_integer(self):
        with pytest.raises(InvalidParametersError):
            ClockConfig(50_000_000, 300_000)

    def test_shift_every_divider_ticks(self, full_state):
        run_until(full_state, 499)
        assert full_state.sr_ticks == 0
        step_sys(full_state)
        assert full_state.sr_ticks == 1
        run_until(full_state, 5000)
        assert full_state.sr_ticks == 10


class TestLatency:
    def test_single_request_loads_after_fourteen_cycles(self, full_state, rng):
        enqueue_request(full_state, random_requests(1, 128, rng)[0], 0)
        run_until(full_state, 20)
        loads = events_of(full_state, EventKind.FE_LOAD)
        assert [event.cycle for event in loads] == [14]
        assert events_of(full_state, EventKind.DEQUEUE)[0].cycle == 0
        assert events_of(full_state, EventKind.MEM_WRITE)[0].cycle == 0
        assert events_of(full_state, EventKind.MEM_READ)[0].cycle == 1
        assert events_of(full_state, EventKind.ENCODE_START)[0].cycle == 2

    def test_busy_while_counting(self, full_state, rng):
        enqueue_request(full_state, random_requests(1, 128, rng)[0], 0)
        step_sys(full_state)
        assert full_state.tx.busy
        assert full_state.tx.pipeline_counter == 14
        run_until(full_state, 14)
        assert full_state.tx.pipeline_counter == 1
        step_sys(full_state)
        assert not full_state.tx.busy
        assert full_state.tx.pipeline_counter == 0

    def test_back_to_back_requests(self, full_state, rng):
        back_to_back(full_state, random_requests(100, 128, rng))
        run_until_idle(full_state)
        loads = events_of(full_state, EventKind.FE_LOAD)
        assert [event.cycle for event in loads] == [14 * (i + 1) for i in range(100)]
        dequeues = {event.anchor: event.cycle for event in events_of(full_state, EventKind.DEQUEUE)}
        assert all(event.cycle - dequeues[event.anchor] == 14 for event in loads)

    def test_custom_latency(self, rng):
        network = NetworkConfig(
            front_ends=8, ml=16, cl=32, sr_hz=10_000_000, latency_cycles=5
        )
        state = create_state(network, polar_config_for(network))
        back_to_back(state, random_requests(3, 16, rng))
        run_until_idle(state)
        assert [e.cycle for e in events_of(state, EventKind.FE_LOAD)] == [5, 10, 15]

    def test_latency_too_short(self):
        with pytest.raises(InvalidParametersError):
            NetworkConfig(latency_cycles=2)

    def test_overlap_pipelines_requests(self, rng):
        network = NetworkConfig(front_ends=8, ml=16, cl=32, overlap=True)
        state = create_state(network, polar_config_for(network))
        back_to_back(state, random_requests(4, 16, rng))
        run_until_idle(state)
        assert [e.cycle for e in events_of(state, EventKind.FE_LOAD)] == [14, 15, 16, 17]

    def test_overlap_same_anchor_reads_its_own_payload(self, rng):
        network = NetworkConfig(front_ends=8, ml=16, cl=32, overlap=True)
        polar = polar_config_for(network)
        state = create_state(network, polar)
        first, second = BitBlock.random(16, rng), BitBlock.random(16, rng)
        enqueue_request(state, UpdateRequest.for_message(2, first), 0)
        enqueue_request(state, UpdateRequest.for_message(2, second), 1)
        run_until(state, 15)
        assert state.front_ends[2].buffer_message == first
        step_sys(state)
        assert state.front_ends[2].buffer_message == second


class TestEnqueue:
    def test_invalid_address(self, full_state):
        with pytest.raises(InvalidAddressError):
            enqueue_request(full_state, UpdateRequest(1, 100, 0), 0)
        assert events_of(full_state, EventKind.ERROR)[0].detail == "invalid_address"

    def test_enqueue_in_the_past(self, full_state, rng):
        run_until(full_state, 10)
        with pytest.raises(InvalidParametersError):
            enqueue_request(full_state, random_requests(1, 128, rng)[0], 5)

    def test_second_request_overwrites_first(self, small_state, rng):
        first, second = BitBlock.random(16, rng), BitBlock.random(16, rng)
        enqueue_request(small_state, UpdateRequest.for_message(1, first), 0)
        enqueue_request(small_state, UpdateRequest.for_message(1, second), 0)
        run_until_idle(small_state)
        assert small_state.memory.cells[1] == second.to_int()
        expected = transmit_pipeline(second, small_state.polar, RllScheme.FOUR_B_SIX_B)
        assert small_state.front_ends[1].buffer_reg == expected

    def test_backpressure(self, rng):
        network = NetworkConfig(front_ends=8, ml=16, cl=32, fifo_depth=2)
        state = create_state(network, polar_config_for(network))
        back_to_back(state, random_requests(5, 16, rng))
        run_until_idle(state)
        errors = events_of(state, EventKind.ERROR)
        assert [event.detail for event in errors] == ["backpressure"] * 3
        assert len(state.overflowed) == 3
        assert len(events_of(state, EventKind.FE_LOAD)) == 2

    def test_fifo_preserves_order(self, small_state, rng):
        requests = random_requests(6, 16, rng)
        back_to_back(small_state, requests, gap=3)
        run_until_idle(small_state)
        anchors = [event.anchor for event in events_of(small_state, EventKind.DEQUEUE)]
        assert anchors == list(range(6))


class TestRun:
    def test_run_until_zero_is_identity(self, full_state):
        run_until(full_state, 0)
        assert full_state.cycle == 0
        assert full_state.event_log == []

    def test_cycles_are_nondecreasing(self, small_state, rng):
        back_to_back(small_state, random_requests(8, 16, rng), gap=7)
        run_until(small_state, 2000)
        cycles = [event.cycle for event in small_state.event_log]
        assert cycles == sorted(cycles)

    def test_conservation(self, small_state, rng):
        back_to_back(small_state, random_requests(8, 16, rng), gap=2)
        run_until_idle(small_state)
        assert len(events_of(small_state, EventKind.MEM_WRITE)) == 8
        assert len(events_of(small_state, EventKind.FE_LOAD)) == 8

    def test_isolation(self, small_state, rng):
        enqueue_request(small_state, random_requests(1, 16, rng, start_address=3)[0], 0)
        run_until_idle(small_state)
        run_to_frame_boundary(small_state)
        for front_end in small_state.front_ends:
            if front_end.id == 3:
                assert front_end.piso.any()
            else:
                assert front_end.buffer_reg is None
                assert not front_end.piso.any()

    def test_deterministic(self, small_network, rng):
        requests = random_requests(8, 16, rng)

        def run():
            state = create_state(small_network, polar_config_for(small_network))
            back_to_back(state, requests, gap=5)
            run_until(state, 3000)
            return state.event_log, capture_waveforms(state, 96).waveforms

        assert run() == run()


class TestWaveforms:
    def test_unwritten_anchor_is_zero(self, small_state):
        waveform = sample_waveform(small_state, 4, 100)
        assert waveform == BitBlock.zeros(100)

    def test_invalid_anchor(self, small_state):
        with pytest.raises(InvalidAddressError):
            sample_waveform(small_state, 8, 10)

    def test_periodic(self, small_state, rng):
        message = BitBlock.random(16, rng)
        enqueue_request(small_state, UpdateRequest.for_message(0, message), 0)
        run_until_idle(small_state)
        run_to_frame_boundary(small_state)
        length = small_state.frame_length
        waveform = sample_waveform(small_state, 0, 2 * length)
        assert waveform.bits[:length].tolist() == waveform.bits[length:].tolist()

    def test_frame_not_truncated(self, small_state, rng):
        """A new frame waits for the current one to finish"""
        first, second = BitBlock.random(16, rng), BitBlock.random(16, rng)
        enqueue_request(small_state, UpdateRequest.for_message(0, first), 0)
        run_until_idle(small_state)
        run_to_frame_boundary(small_state)
        length = small_state.frame_length
        run_until(small_state, small_state.cycle + 10 * small_state.divider)
        enqueue_request(small_state, UpdateRequest.for_message(0, second))
        capture = capture_waveforms(small_state, 2 * length, [0])
        waveform = capture.waveforms[0]
        scheme = small_state.network.scheme
        assert capture.offset == length - 10
        assert (
            receive_and_decode(waveform, small_state.polar, scheme, capture.offset) == second
        )
        assert waveform.bits[: capture.offset].tolist() == (
            transmit_pipeline(first, small_state.polar, scheme).bits.bits[10:].tolist()
        )

    def test_zero_waveform_is_a_violation(self, full_code):
        with pytest.raises(LineCodeViolationError) as ex:
            receive_and_decode(BitBlock.zeros(512), full_code, RllScheme.MANCHESTER, 0)
        assert ex.value.index == 0

    def test_waveform_too_short(self, full_code):
        with pytest.raises(InvalidParametersError):
            receive_and_decode(BitBlock.zeros(500), full_code, RllScheme.MANCHESTER, 0)

    @pytest.mark.parametrize("ml, cl", PAIRS)
    @pytest.mark.parametrize("scheme", SCHEMES)
    def test_end_to_end_all_lengths(self, ml, cl, scheme, rng):
        network = NetworkConfig(front_ends=8, ml=ml, cl=cl, scheme=scheme, sr_hz=10_000_000)
        state = create_state(network, polar_config_for(network))
        requests = random_requests(8, ml, rng)
        back_to_back(state, requests)
        run_until_idle(state)
        run_to_frame_boundary(state)
        capture = capture_waveforms(state, state.frame_length)
        for request in requests:
            decoded = receive_and_decode(
                capture.waveforms[request.address], state.polar, scheme, capture.offset
            )
            assert decoded == request.message()

    @pytest.mark.parametrize("scheme", SCHEMES)
    def test_end_to_end_full_scale(self, scheme, rng):
        network = NetworkConfig(scheme=scheme)
        state = create_state(network, polar_config_for(network))
        requests = random_requests(100, 128, rng)
        back_to_back(state, requests)
        run_until_idle(state)
        run_to_frame_boundary(state)
        period = 512 if scheme is RllScheme.MANCHESTER else 384
        assert state.frame_length == period
        capture = capture_waveforms(state, 2 * period)
        assert capture.offset == 0
        for request in requests:
            waveform = capture.waveforms[request.address]
            assert waveform.bits[:period].tolist() == waveform.bits[period:].tolist()
            assert receive_and_decode(waveform, state.polar, scheme, 0) == request.message()
        assert all(result.match for result in verify_waveforms(state, capture))


class TestThroughput:
    def test_manchester_transmitter(self, full_code):
        throughput = report_throughput(full_code, 14, REPORTED_FMAX_HZ[RllScheme.MANCHESTER])
        assert throughput == pytest.approx(696.0e6, rel=1e-3)
        assert throughput == pytest.approx(REPORTED_THROUGHPUT_BPS[RllScheme.MANCHESTER], rel=0.02)

    def test_four_b_six_b_transmitter(self, full_code):
        throughput = report_throughput(full_code, 14, REPORTED_FMAX_HZ[RllScheme.FOUR_B_SIX_B])
        assert throughput == pytest.approx(637.2e6, rel=1e-3)
        assert throughput == pytest.approx(
            REPORTED_THROUGHPUT_BPS[RllScheme.FOUR_B_SIX_B], rel=0.02
        )

    def test_one_bit_per_second(self):
        config = PolarCodeConfig.from_length(2, {0})
        assert report_throughput(config, 14, 14) == 1

    def test_latency_must_be_positive(self, full_code):
        with pytest.raises(InvalidParametersError):
            report_throughput(full_code, 0, 1e6)


class TestArtefacts:
    def test_event_log_csv(self, small_state, rng, tmp_path):
        back_to_back(small_state, random_requests(2, 16, rng))
        run_until_idle(small_state)
        path = tmp_path / "events.csv"
        write_event_log(small_state, str(path))
        frame = pd.read_csv(path)
        assert list(frame.columns) == ["cycle", "event", "anchor", "detail"]
        assert set(frame["event"]) <= {kind.value for kind in EventKind}
        assert len(frame) == len(small_state.event_log)

    def test_waveform_files(self, small_state, tmp_path):
        capture = capture_waveforms(small_state, 12, [0, 5])
        paths = write_waveforms(capture, str(tmp_path))
        assert sorted(os.path.basename(p) for p in paths) == ["fe_0.bits", "fe_5.bits"]
        with open(tmp_path / "fe_5.bits") as bits_file:
            assert bits_file.read() == "0" * 12 + "\n"
