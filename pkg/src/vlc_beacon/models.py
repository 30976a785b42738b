from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import FrozenSet, Iterable, Optional, Union

import numpy as np

from .errors import InvalidParametersError
from .utils import (
    bit_string_to_hex,
    format_bit_string,
    hex_to_bit_string,
    parse_bit_string,
)

PAYLOAD_BITS = 128
ADDRESS_BITS = 7
REQUEST_BITS = 1 + ADDRESS_BITS + PAYLOAD_BITS
REQUEST_BYTES = REQUEST_BITS // 8

SUPPORTED_LENGTHS = ((16, 32), (32, 64), (64, 128), (128, 256))


@dataclass(frozen=True, eq=False)
class BitBlock:
    """An immutable, fixed length sequence of bits

    Element 0 is the first character of the ``0``/``1`` string form.
    """

    bits: np.ndarray

    def __post_init__(self) -> None:
        raw = np.asarray(self.bits)
        if not np.isin(raw, (0, 1)).all():
            raise InvalidParametersError("A BitBlock holds only 0 and 1")
        array = np.array(raw, dtype=np.uint8).reshape(-1)
        array.setflags(write=False)
        object.__setattr__(self, "bits", array)

    @property
    def length(self) -> int:
        return int(self.bits.shape[0])

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, index: int) -> int:
        if not 0 <= index < self.length:
            raise IndexError(f"Bit {index} outside of block of length {self.length}")
        return int(self.bits[index])

    def __iter__(self):
        return (int(b) for b in self.bits)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitBlock):
            return NotImplemented
        return bool(np.array_equal(self.bits, other.bits))

    def __hash__(self) -> int:
        return hash(self.bits.tobytes())

    def __xor__(self, other: "BitBlock") -> "BitBlock":
        if other.length != self.length:
            raise InvalidParametersError("XOR of blocks with different lengths")
        return BitBlock(self.bits ^ other.bits)

    def __repr__(self) -> str:
        return f"BitBlock('{self.to_string()}')"

    def count_ones(self) -> int:
        return int(self.bits.sum())

    def to_string(self) -> str:
        return format_bit_string(self.bits)

    def to_hex(self) -> str:
        return bit_string_to_hex(self.to_string())

    def to_int(self) -> int:
        return int(self.to_string(), 2) if self.length else 0

    @classmethod
    def zeros(cls, length: int) -> "BitBlock":
        return cls(np.zeros(length, dtype=np.uint8))

    @classmethod
    def from_string(cls, text: str) -> "BitBlock":
        return cls(parse_bit_string(text))

    @classmethod
    def from_hex(cls, text: str) -> "BitBlock":
        return cls.from_string(hex_to_bit_string(text))

    @classmethod
    def from_int(cls, value: int, length: int) -> "BitBlock":
        if value < 0 or value >> length:
            raise InvalidParametersError(f"{value} does not fit in {length} bits")
        return cls.from_string(format(value, f"0{length}b") if length else "")

    @classmethod
    def random(cls, length: int, rng: np.random.Generator) -> "BitBlock":
        return cls(rng.integers(0, 2, size=length, dtype=np.uint8))


class RllScheme(Enum):
    MANCHESTER = "manchester"
    FOUR_B_SIX_B = "4b6b"

    @classmethod
    def parse(cls, text: Union[str, "RllScheme"]) -> "RllScheme":
        if isinstance(text, RllScheme):
            return text
        key = text.strip().lower().replace("-", "").replace("_", "")
        if key in ("manchester", "man"):
            return cls.MANCHESTER
        if key in ("4b6b", "fourbsixb"):
            return cls.FOUR_B_SIX_B
        raise InvalidParametersError(f"Unknown RLL scheme '{text}'")

    def frame_length(self, codeword_length: int) -> int:
        """Length of the line coded frame for a codeword of the given length"""
        if self is RllScheme.MANCHESTER:
            return 2 * codeword_length
        if codeword_length % 4:
            raise InvalidParametersError(
                f"4B6B needs a length divisible by 4, got {codeword_length}"
            )
        return 3 * codeword_length // 2


@dataclass(frozen=True)
class PolarCodeConfig:
    """Polar code of length N = 2^n with a set of frozen positions"""

    n: int
    frozen: FrozenSet[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise InvalidParametersError(f"Polar exponent must be >= 1, got {self.n}")
        frozen = frozenset(int(i) for i in self.frozen)
        object.__setattr__(self, "frozen", frozen)
        outside = [i for i in frozen if not 0 <= i < self.N]
        if outside:
            raise InvalidParametersError(
                f"Frozen indices {sorted(outside)} outside of [0, {self.N})"
            )
        if self.K < 1:
            raise InvalidParametersError("At least one position must carry information")

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def K(self) -> int:
        return self.N - len(self.frozen)

    @cached_property
    def information_positions(self) -> np.ndarray:
        mask = np.ones(self.N, dtype=bool)
        mask[sorted(self.frozen)] = False
        positions = np.flatnonzero(mask)
        positions.setflags(write=False)
        return positions

    @classmethod
    def from_length(cls, N: int, frozen: Iterable[int] = ()) -> "PolarCodeConfig":
        if N < 2 or N & (N - 1):
            raise InvalidParametersError(
                f"Codeword length must be a power of two >= 2, got {N}"
            )
        return cls(N.bit_length() - 1, frozenset(frozen))


@dataclass(frozen=True)
class LineCodedFrame:
    """RLL encoded bits driving one front-end"""

    scheme: RllScheme
    bits: BitBlock

    def __post_init__(self) -> None:
        group = 2 if self.scheme is RllScheme.MANCHESTER else 6
        if self.bits.length % group:
            raise InvalidParametersError(
                f"A {self.scheme.value} frame length must be a multiple of {group}, "
                + f"got {self.bits.length}"
            )

    def __len__(self) -> int:
        return self.bits.length

    def is_dc_balanced(self) -> bool:
        return 2 * self.bits.count_ones() == self.bits.length


@dataclass(frozen=True)
class UpdateRequest:
    """A 136-bit write request: flag, anchor address and 128-bit payload

    Bit 135 is the write flag, bits 134..128 the address and bits 127..0 the
    payload. Shorter messages occupy the low-order payload bits.
    """

    write_flag: int
    address: int
    payload: int
    declared_ml: int = PAYLOAD_BITS

    def __post_init__(self) -> None:
        if self.write_flag not in (0, 1):
            raise InvalidParametersError("The write flag is a single bit")
        if not 0 <= self.address < (1 << ADDRESS_BITS):
            raise InvalidParametersError(
                f"Address {self.address} does not fit in {ADDRESS_BITS} bits"
            )
        if not 0 <= self.payload < (1 << PAYLOAD_BITS):
            raise InvalidParametersError(f"Payload does not fit in {PAYLOAD_BITS} bits")
        if self.declared_ml not in (ml for ml, _ in SUPPORTED_LENGTHS):
            raise InvalidParametersError(f"Unsupported message length {self.declared_ml}")

    @classmethod
    def for_message(cls, address: int, message: BitBlock) -> "UpdateRequest":
        return cls(1, address, message.to_int(), message.length)

    def message(self, ml: Optional[int] = None) -> BitBlock:
        """The low-order message bits of the payload"""
        ml = self.declared_ml if ml is None else ml
        return BitBlock.from_int(self.payload & ((1 << ml) - 1), ml)

    def to_int(self) -> int:
        return (
            (self.write_flag << (REQUEST_BITS - 1))
            | (self.address << PAYLOAD_BITS)
            | self.payload
        )

    def to_bytes(self) -> bytes:
        return self.to_int().to_bytes(REQUEST_BYTES, "big")

    @classmethod
    def from_int(cls, value: int, declared_ml: int = PAYLOAD_BITS) -> "UpdateRequest":
        if not 0 <= value < (1 << REQUEST_BITS):
            raise InvalidParametersError(f"Request does not fit in {REQUEST_BITS} bits")
        return cls(
            value >> (REQUEST_BITS - 1),
            (value >> PAYLOAD_BITS) & ((1 << ADDRESS_BITS) - 1),
            value & ((1 << PAYLOAD_BITS) - 1),
            declared_ml,
        )

    @classmethod
    def from_bytes(cls, data: bytes, declared_ml: int = PAYLOAD_BITS) -> "UpdateRequest":
        if len(data) != REQUEST_BYTES:
            raise InvalidParametersError(
                f"A serialized request is {REQUEST_BYTES} bytes, got {len(data)}"
            )
        return cls.from_int(int.from_bytes(data, "big"), declared_ml)


@dataclass(frozen=True)
class ClockConfig:
    sys_hz: int = 50_000_000
    sr_hz: int = 100_000

    def __post_init__(self) -> None:
        if self.sys_hz <= 0 or self.sr_hz <= 0:
            raise InvalidParametersError(
                "Clock frequencies must be positive", ("sys_hz", "sr_hz")
            )
        if self.sys_hz % self.sr_hz:
            raise InvalidParametersError(
                f"sys_hz {self.sys_hz} is not a multiple of sr_hz {self.sr_hz}",
                ("sys_hz", "sr_hz"),
            )

    @property
    def divider(self) -> int:
        return self.sys_hz // self.sr_hz


@dataclass(frozen=True)
class FrozenSource:
    """Where the frozen set of a network comes from: a BEC design or a file"""

    kind: str = "bec"
    erasure: float = 0.5
    path: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind not in ("bec", "file"):
            raise InvalidParametersError(f"Unknown frozen source '{self.kind}'")
        if self.kind == "bec" and not 0.0 < self.erasure < 1.0:
            raise InvalidParametersError(
                f"Erasure probability must be in (0, 1), got {self.erasure}"
            )
        if self.kind == "file" and not self.path:
            raise InvalidParametersError("A file frozen source needs a path")


@dataclass(frozen=True)
class NetworkConfig:
    front_ends: int = 100
    ml: int = 128
    cl: int = 256
    scheme: RllScheme = RllScheme.MANCHESTER
    sys_hz: int = 50_000_000
    sr_hz: int = 100_000
    latency_cycles: int = 14
    fifo_depth: int = 128
    overlap: bool = False
    frozen_source: FrozenSource = field(default_factory=FrozenSource)

    def __post_init__(self) -> None:
        if (self.ml, self.cl) not in SUPPORTED_LENGTHS:
            raise InvalidParametersError(
                f"(ml, cl) = ({self.ml}, {self.cl}) is not one of {SUPPORTED_LENGTHS}",
                ("ml", "cl"),
            )
        if not 1 <= self.front_ends <= (1 << ADDRESS_BITS):
            raise InvalidParametersError(
                f"front_ends must be in [1, {1 << ADDRESS_BITS}], got {self.front_ends}",
                ("front_ends",),
            )
        if self.latency_cycles < 3:
            raise InvalidParametersError(
                "latency_cycles covers a memory write, a read and the encoder; "
                + f"it must be >= 3, got {self.latency_cycles}",
                ("latency_cycles",),
            )
        if self.fifo_depth < 1:
            raise InvalidParametersError(
                f"fifo_depth must be >= 1, got {self.fifo_depth}", ("fifo_depth",)
            )
        ClockConfig(self.sys_hz, self.sr_hz)

    @property
    def clock(self) -> ClockConfig:
        return ClockConfig(self.sys_hz, self.sr_hz)
