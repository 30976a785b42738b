"""Command line front end of the beacon network tools

Exit codes
----------
0   success
2   invalid arguments or malformed config / schedule
3   line code violation, or a waveform that fails verification
4   schedule addresses an anchor outside of the network
"""
import argparse
import sys
from logging import DEBUG, INFO, StreamHandler, basicConfig, getLogger
from os import environ, makedirs
from os.path import join
from typing import List, Optional, Sequence

import pandas as pd

from .bench import DEFAULT_K_VALUES, Scenario, run_scenario, run_scenarios
from .coding import code_rate, design_frozen_set, transmit_pipeline
from .datapath import (
    REPORTED_FMAX_HZ,
    REPORTED_THROUGHPUT_BPS,
    capture_waveforms,
    create_state,
    enqueue_request,
    receive_and_decode,
    report_throughput,
    run_to_frame_boundary,
    run_until,
    run_until_idle,
    verify_waveforms,
    write_event_log,
    write_waveforms,
)
from .errors import (
    InvalidAddressError,
    InvalidParametersError,
    LineCodeViolationError,
    VlcBeaconError,
)
from .firmware_model import (
    MEASURED,
    MODELED,
    FootprintReport,
    estimate_footprint,
    write_footprint_csv,
)
from .models import BitBlock, ClockConfig, PolarCodeConfig, RllScheme
from .parser import (
    load_frozen_file,
    load_network_config,
    load_schedule,
    polar_config_for,
    write_frozen_file,
)

logger = getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_LINE_CODE = 3
EXIT_ADDRESS = 4


def _integer_list(text: str) -> List[int]:
    try:
        return [int(value) for value in text.split(",") if value.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{text}' is not a comma separated list of integers")


def _add_code_arguments(parser: argparse.ArgumentParser, sweep: bool = False) -> None:
    if sweep:
        parser.add_argument(
            "--ml", type=_integer_list, default=[128], help="Message lengths K, comma separated"
        )
    else:
        parser.add_argument("--ml", type=int, default=128, help="Message length K in bits")
    parser.add_argument("--cl", type=int, help="Codeword length N, defaults to 2 * ml")
    parser.add_argument(
        "--rll", default="manchester", help="Line code: manchester or 4b6b"
    )
    parser.add_argument("--frozen-file", help="Read the frozen set from this file")
    parser.add_argument(
        "--erasure", type=float, default=0.5, help="Erasure probability of the BEC design"
    )


def argument_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    help = "Seed of the random message generator"
    common.add_argument("--seed", type=int, default=0, help=help)
    help = "Directory for output artefacts"
    common.add_argument("--out-dir", help=help)
    help = "Also log progress to stderr"
    common.add_argument("--verbose", action="store_true", help=help)

    parser = argparse.ArgumentParser(
        prog="vlc_beacon",
        description="Polar + RLL beacon encoding, transmitter simulation and benchmarks",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    encode = commands.add_parser("encode", parents=[common], help="Encode one message")
    _add_code_arguments(encode)
    message = encode.add_mutually_exclusive_group(required=True)
    message.add_argument("--message-hex", help="Message as hex, most significant nibble first")
    message.add_argument("--message-bits", help="Message as a 0/1 string")
    encode.add_argument("--format", choices=["bits", "hex"], default="bits")

    decode = commands.add_parser("decode", parents=[common], help="Decode one frame")
    _add_code_arguments(decode)
    frame = decode.add_mutually_exclusive_group(required=True)
    frame.add_argument("--frame-bits", help="Frame as a 0/1 string")
    frame.add_argument("--frame-hex", help="Frame as hex")
    decode.add_argument("--offset", type=int, default=0, help="First sample of the frame")
    decode.add_argument("--format", choices=["bits", "hex"], default="hex")

    frozen = commands.add_parser("frozen", parents=[common], help="Design a frozen set")
    _add_code_arguments(frozen)
    frozen.add_argument("--output", help="Write the frozen set to this file")

    simulate = commands.add_parser(
        "simulate", parents=[common], help="Run the centralized transmitter simulator"
    )
    simulate.add_argument("config_path", help="Network config file (key = value)")
    simulate.add_argument("schedule_path", help="Request schedule CSV")
    simulate.add_argument(
        "--cycles", type=int, help="Run to this sys cycle before capturing waveforms"
    )

    bench = commands.add_parser("bench", parents=[common], help="Delay benchmark")
    _add_code_arguments(bench, sweep=True)
    bench.add_argument("--mode", choices=[MODELED, MEASURED], default=MODELED)
    bench.add_argument(
        "--k", type=_integer_list, default=list(DEFAULT_K_VALUES), help="Transmitter counts"
    )
    bench.add_argument("--front-ends", type=int, default=100)
    bench.add_argument("--latency", type=int, default=14, help="Latency in sys cycles")
    bench.add_argument("--sys-hz", type=int, default=50_000_000)
    bench.add_argument("--sr-hz", type=int, default=100_000)
    bench.add_argument("--repetitions", type=int, default=30)
    bench.add_argument("--warmup", type=int, default=10)
    bench.add_argument("--gap", type=int, default=0, help="Cycles between request arrivals")
    bench.add_argument(
        "--calibration-scale", type=float, help="Seconds per modeled cost unit"
    )

    footprint = commands.add_parser(
        "footprint", parents=[common], help="Estimate firmware array memory"
    )
    footprint.add_argument("--ml", type=int, default=128)
    footprint.add_argument("--cl", type=int, help="Codeword length, defaults to 2 * ml")
    footprint.add_argument("--rll", help="manchester or 4b6b, both when omitted")
    footprint.add_argument("--overhead", type=int, default=0, help="Bytes added to arrays")
    footprint.add_argument("--budget", type=int, default=2048, help="SRAM budget in bytes")
    return parser


def _polar_config(args: argparse.Namespace) -> PolarCodeConfig:
    cl = args.cl if args.cl is not None else 2 * args.ml
    if args.frozen_file:
        config = PolarCodeConfig.from_length(cl, load_frozen_file(args.frozen_file))
        if config.K != args.ml:
            raise InvalidParametersError(
                f"Frozen file leaves K = {config.K} information bits, expected {args.ml}"
            )
        return config
    base = PolarCodeConfig.from_length(cl)
    return PolarCodeConfig(base.n, design_frozen_set(base.n, args.ml, args.erasure))


def _format_bits(block: BitBlock, form: str) -> str:
    return block.to_hex() if form == "hex" else block.to_string()


def cmd_encode(args: argparse.Namespace) -> int:
    config = _polar_config(args)
    scheme = RllScheme.parse(args.rll)
    if args.message_hex is not None:
        message = BitBlock.from_hex(args.message_hex)
    else:
        message = BitBlock.from_string(args.message_bits)
    frame = transmit_pipeline(message, config, scheme)
    logger.info(
        f"Encoded {message.length} bits into a {len(frame)} bit {scheme.value} frame, "
        + f"rate {code_rate(config, scheme)}"
    )
    print(_format_bits(frame.bits, args.format))
    return EXIT_OK


def cmd_decode(args: argparse.Namespace) -> int:
    config = _polar_config(args)
    scheme = RllScheme.parse(args.rll)
    if args.frame_hex is not None:
        waveform = BitBlock.from_hex(args.frame_hex)
    else:
        waveform = BitBlock.from_string(args.frame_bits)
    message = receive_and_decode(waveform, config, scheme, args.offset)
    form = args.format if message.length % 4 == 0 else "bits"
    print(_format_bits(message, form))
    return EXIT_OK


def cmd_frozen(args: argparse.Namespace) -> int:
    config = _polar_config(args)
    indices = sorted(config.frozen)
    if args.output:
        write_frozen_file(
            args.output,
            indices,
            f"N={config.N} K={config.K} frozen positions",
        )
        logger.info(f"Wrote {len(indices)} frozen indices to {args.output}")
    else:
        print(",".join(str(i) for i in indices))
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    out_dir = args.out_dir or "simulation"
    network = load_network_config(args.config_path)
    polar = polar_config_for(network)
    schedule = load_schedule(args.schedule_path, network)

    state = create_state(network, polar)
    for cycle, request in schedule:
        enqueue_request(state, request, cycle)
    if args.cycles is not None:
        run_until(state, max(args.cycles, state.cycle))
    run_until_idle(state)
    run_to_frame_boundary(state)
    capture = capture_waveforms(state, state.frame_length)

    makedirs(out_dir, exist_ok=True)
    write_waveforms(capture, out_dir)
    write_event_log(state, join(out_dir, "events.csv"))
    results = verify_waveforms(state, capture)
    pd.DataFrame(
        [
            (
                r.anchor,
                r.loaded,
                r.expected.to_hex() if r.expected is not None else "",
                r.decoded.to_hex() if r.decoded is not None else "",
                r.match,
            )
            for r in results
        ],
        columns=["anchor", "loaded", "expected_hex", "decoded_hex", "match"],
    ).to_csv(join(out_dir, "verification.csv"), index=False, lineterminator="\n")

    failed = [r.anchor for r in results if not r.match]
    throughput = report_throughput(polar, network.latency_cycles, REPORTED_FMAX_HZ[network.scheme])
    reported = REPORTED_THROUGHPUT_BPS[network.scheme]
    logger.info(
        f"Simulated {len(schedule)} requests to cycle {state.cycle}, "
        + f"{len(results) - len(failed)}/{len(results)} anchors verified, "
        + f"throughput at reported Fmax {throughput / 1e6:.1f} Mbps "
        + f"(reported {reported / 1e6:.1f} Mbps)"
    )
    print(f"verified {len(results) - len(failed)}/{len(results)} anchors")
    if failed:
        logger.error(f"Anchors failed verification: {failed}")
        return EXIT_LINE_CODE
    return EXIT_OK


def _bench_scenario(args: argparse.Namespace, ml: int, cl: int) -> Scenario:
    return Scenario(
        k_values=tuple(args.k),
        ml=ml,
        cl=cl,
        scheme=RllScheme.parse(args.rll),
        clock=ClockConfig(args.sys_hz, args.sr_hz),
        latency_cycles=args.latency,
        front_ends=args.front_ends,
        mode=args.mode,
        repetitions=args.repetitions,
        warmup=args.warmup,
        calibration_scale=args.calibration_scale,
        inter_arrival_gap=args.gap,
        erasure=args.erasure,
        seed=args.seed,
    )


def cmd_bench(args: argparse.Namespace) -> int:
    out_dir = args.out_dir or "bench"
    if not args.ml:
        raise InvalidParametersError("--ml needs at least one message length")
    if len(args.ml) == 1:
        ml = args.ml[0]
        scenario = _bench_scenario(args, ml, args.cl if args.cl is not None else 2 * ml)
        table = run_scenario(scenario, out_dir, progress=args.verbose)
        print(table.to_frame().to_csv(index=False, lineterminator="\n"), end="")
        return EXIT_OK

    # one scenario per message length, each at rate 1/2
    if args.cl is not None:
        raise InvalidParametersError("--cl cannot be combined with several --ml values")
    if len(set(args.ml)) != len(args.ml):
        raise InvalidParametersError(f"--ml lists a message length twice: {args.ml}")
    scenarios = [_bench_scenario(args, ml, 2 * ml) for ml in args.ml]
    tables = run_scenarios(scenarios, [join(out_dir, f"ml_{ml}") for ml in args.ml])
    frame = pd.concat(
        [table.to_frame().assign(ml=ml) for ml, table in zip(args.ml, tables)],
        ignore_index=True,
    )
    frame = frame[["ml"] + [column for column in frame.columns if column != "ml"]]
    logger.info(f"Swept {len(scenarios)} message lengths into {out_dir}")
    print(frame.to_csv(index=False, lineterminator="\n"), end="")
    return EXIT_OK


def cmd_footprint(args: argparse.Namespace) -> int:
    cl = args.cl if args.cl is not None else 2 * args.ml
    if args.rll:
        schemes: Sequence[RllScheme] = [RllScheme.parse(args.rll)]
    else:
        schemes = [RllScheme.MANCHESTER, RllScheme.FOUR_B_SIX_B]
    reports: List[FootprintReport] = [
        estimate_footprint(args.ml, cl, scheme, args.overhead, args.budget)
        for scheme in schemes
    ]
    for report in reports:
        print(
            f"{report.ml},{report.cl},{report.scheme.value},{report.array_bytes},"
            + f"{report.overhead_bytes},{report.total} ({report.budget_percent:.0f}%)"
        )
    if args.out_dir:
        makedirs(args.out_dir, exist_ok=True)
        write_footprint_csv(reports, join(args.out_dir, "footprint.csv"))
    return EXIT_OK


COMMANDS = {
    "encode": cmd_encode,
    "decode": cmd_decode,
    "frozen": cmd_frozen,
    "simulate": cmd_simulate,
    "bench": cmd_bench,
    "footprint": cmd_footprint,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command and return its exit code"""
    args = argument_parser().parse_args(argv)
    handler: Optional[StreamHandler] = None
    if args.verbose:
        handler = StreamHandler(sys.stderr)
        handler.setLevel(INFO)
        getLogger("vlc_beacon").addHandler(handler)
    try:
        return COMMANDS[args.command](args)
    except LineCodeViolationError as ex:
        logger.error(str(ex))
        print(f"error: {ex}", file=sys.stderr)
        return EXIT_LINE_CODE
    except InvalidAddressError as ex:
        logger.error(str(ex))
        print(f"error: {ex}", file=sys.stderr)
        return EXIT_ADDRESS if args.command == "simulate" else EXIT_INVALID
    except (VlcBeaconError, OSError) as ex:
        logger.error(str(ex))
        print(f"error: {ex}", file=sys.stderr)
        return EXIT_INVALID
    finally:
        if handler is not None:
            getLogger("vlc_beacon").removeHandler(handler)


def entry_point():
    """This is the console entry point to the programme"""
    basicConfig(
        filename=environ.get("VLC_BEACON_LOG", "vlc_beacon.log"),
        filemode="w",
        encoding="utf-8",
        level=DEBUG,
    )
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
