"""Parsers for the text files that drive the simulator

- network config: flat ``key = value`` lines with ``#`` comments
- request schedule: CSV with columns ``cycle,address,payload_hex``
- frozen set: one decimal index per line, ascending, ``#`` comments
"""
from dataclasses import fields
from io import StringIO
from logging import getLogger
from typing import Dict, FrozenSet, Iterable, List, Tuple

import pandas as pd

from .coding import design_frozen_set
from .errors import ConfigError, InvalidAddressError, InvalidParametersError
from .models import (
    FrozenSource,
    NetworkConfig,
    PolarCodeConfig,
    RllScheme,
    UpdateRequest,
)
from .utils import HEX_STRING

logger = getLogger(__name__)

SCHEDULE_COLUMNS = ["cycle", "address", "payload_hex"]
PAYLOAD_HEX_DIGITS = 32

_INTEGER_KEYS = {
    "front_ends",
    "ml",
    "cl",
    "sys_hz",
    "sr_hz",
    "latency_cycles",
    "fifo_depth",
}


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise InvalidParametersError(f"'{text}' is not a boolean")


def parse_frozen_source(text: str) -> FrozenSource:
    """Parse ``bec``, ``bec:<erasure>`` or ``file:<path>``"""
    kind, _, argument = text.strip().partition(":")
    kind = kind.strip().lower()
    if kind == "bec":
        if argument:
            return FrozenSource("bec", erasure=float(argument))
        return FrozenSource("bec")
    if kind == "file":
        return FrozenSource("file", path=argument.strip())
    raise InvalidParametersError(f"Unknown frozen source '{text}'")


def parse_network_config(lines: Iterable[str], path: str = "<config>") -> NetworkConfig:
    values: Dict[str, object] = {}
    line_of: Dict[str, int] = {}
    known = {f.name for f in fields(NetworkConfig)} | {"rll", "frozen"}
    for line_number, raw in enumerate(lines, start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        key, separator, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if not separator or not key or not value:
            raise ConfigError(f"expected 'key = value', got '{raw.rstrip()}'", path, line_number)
        if key not in known:
            raise ConfigError(f"unknown key '{key}'", path, line_number)
        try:
            if key in _INTEGER_KEYS:
                name = key
                values[name] = int(value.replace("_", ""))
            elif key in ("rll", "scheme"):
                name = "scheme"
                values[name] = RllScheme.parse(value)
            elif key == "overlap":
                name = "overlap"
                values[name] = parse_bool(value)
            else:
                name = "frozen_source"
                values[name] = parse_frozen_source(value)
        except ValueError as ex:
            raise ConfigError(f"invalid value for '{key}': {ex}", path, line_number) from ex
        line_of[name] = line_number
    try:
        config = NetworkConfig(**values)  # type: ignore[arg-type]
    except InvalidParametersError as ex:
        culprits = sorted(line_of[f] for f in ex.fields if f in line_of)
        message = str(ex)
        if len(culprits) > 1:
            message += f" (lines {', '.join(str(n) for n in culprits)})"
        raise ConfigError(message, path, culprits[-1] if culprits else None) from ex
    logger.info(f"Loaded network config from {path}: {config}")
    return config


def read_lines(path: str) -> List[str]:
    """Decode a UTF-8 text file line by line

    Raises
    ------
    ConfigError
        A line is not valid UTF-8; the message names the file line
    """
    with open(path, "rb") as text_file:
        raw = text_file.read()
    lines = []
    for line_number, line in enumerate(raw.splitlines(), start=1):
        try:
            lines.append(line.decode("utf-8"))
        except UnicodeDecodeError as ex:
            raise ConfigError(
                f"invalid UTF-8 byte {line[ex.start]:#04x} at column {ex.start + 1}",
                path,
                line_number,
            ) from ex
    return lines


def load_network_config(path: str) -> NetworkConfig:
    return parse_network_config(read_lines(path), path)


def parse_frozen_indices(lines: Iterable[str], path: str = "<frozen>") -> FrozenSet[int]:
    indices: List[int] = []
    for line_number, raw in enumerate(lines, start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        try:
            index = int(line)
        except ValueError as ex:
            raise ConfigError(f"'{line}' is not a decimal index", path, line_number) from ex
        if index < 0:
            raise ConfigError(f"negative index {index}", path, line_number)
        if indices and index <= indices[-1]:
            raise ConfigError(
                f"indices must be strictly ascending, {index} follows {indices[-1]}",
                path,
                line_number,
            )
        indices.append(index)
    return frozenset(indices)


def load_frozen_file(path: str) -> FrozenSet[int]:
    return parse_frozen_indices(read_lines(path), path)


def write_frozen_file(path: str, frozen: Iterable[int], comment: str = "") -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as frozen_file:
        if comment:
            frozen_file.write(f"# {comment}\n")
        for index in sorted(frozen):
            frozen_file.write(f"{index}\n")


def polar_config_for(network: NetworkConfig) -> PolarCodeConfig:
    """Polar code of a network, designed on the BEC or read from a file"""
    n = network.cl.bit_length() - 1
    source = network.frozen_source
    if source.kind == "file":
        frozen = load_frozen_file(str(source.path))
        config = PolarCodeConfig(n, frozen)
        if config.K != network.ml:
            raise ConfigError(
                f"frozen set leaves K = {config.K} information bits, expected {network.ml}",
                source.path,
            )
        return config
    return PolarCodeConfig(n, design_frozen_set(n, network.ml, source.erasure))


def load_schedule(path: str, network: NetworkConfig) -> List[Tuple[int, UpdateRequest]]:
    """Read ``cycle,address,payload_hex`` rows into timed write requests

    Raises
    ------
    ConfigError
        A row is malformed; the message names the file line
    InvalidAddressError
        A row addresses an anchor outside of the network
    """
    # comments and blank lines are dropped here so rows keep their file line
    numbered = [
        (line_number, _strip_comment(line))
        for line_number, line in enumerate(read_lines(path), start=1)
    ]
    numbered = [(line_number, text) for line_number, text in numbered if text]
    if not numbered:
        raise ConfigError("schedule is empty, expected a header row", path, 1)
    header_line = numbered[0][0]
    for line_number, text in numbered[1:]:
        if text.count(",") != len(SCHEDULE_COLUMNS) - 1:
            raise ConfigError(
                f"expected {len(SCHEDULE_COLUMNS)} fields, got '{text}'", path, line_number
            )
    try:
        frame = pd.read_csv(
            StringIO("\n".join(text for _, text in numbered)),
            dtype=str,
            skipinitialspace=True,
        )
    except pd.errors.ParserError as ex:
        raise ConfigError(f"schedule is not valid CSV: {ex}", path) from ex
    columns = [str(column).strip() for column in frame.columns]
    if columns != SCHEDULE_COLUMNS:
        raise ConfigError(
            f"expected header {','.join(SCHEDULE_COLUMNS)}, got {','.join(columns)}",
            path,
            header_line,
        )
    frame.columns = SCHEDULE_COLUMNS
    schedule = []
    row_lines = [line_number for line_number, _ in numbered[1:]]
    for row_number, row in zip(row_lines, frame.itertuples(index=False)):
        try:
            cycle = int(row.cycle)
            address = int(row.address)
        except (TypeError, ValueError) as ex:
            raise ConfigError(f"cycle and address must be integers: {ex}", path, row_number) from ex
        payload_hex = str(row.payload_hex).strip()
        if len(payload_hex) != PAYLOAD_HEX_DIGITS or not HEX_STRING.match(payload_hex):
            raise ConfigError(
                f"payload must be {PAYLOAD_HEX_DIGITS} hex digits, got '{payload_hex}'",
                path,
                row_number,
            )
        if cycle < 0:
            raise ConfigError(f"negative cycle {cycle}", path, row_number)
        if not 0 <= address < network.front_ends:
            raise InvalidAddressError(address, network.front_ends)
        request = UpdateRequest(1, address, int(payload_hex, 16), network.ml)
        schedule.append((cycle, request))
    logger.info(f"Loaded {len(schedule)} requests from {path}")
    return schedule


def write_schedule(path: str, schedule: Iterable[Tuple[int, UpdateRequest]]) -> None:
    rows = [
        (cycle, request.address, format(request.payload, f"0{PAYLOAD_HEX_DIGITS}x"))
        for cycle, request in schedule
    ]
    pd.DataFrame(rows, columns=SCHEDULE_COLUMNS).to_csv(
        path, index=False, lineterminator="\n"
    )
