"""Polar and RLL encoding of beacon messages

The transmitter procedure runs in three steps for every anchor:

1. Insert the message bits into the non-frozen positions of an N-bit block,
   the frozen positions are pinned to zero
2. Apply the polar butterfly transform, multiplication by F^{(x)n} with
   F = [[1, 0], [1, 1]] over GF(2) and no bit-reversal permutation
3. Line code the codeword with Manchester (rate 1/2) or 4B6B (rate 2/3)

Decoders are noiseless inverses, used to verify frames recovered from the
simulated front-end waveforms.
"""
from fractions import Fraction
from logging import getLogger
from typing import FrozenSet

import numpy as np

from .errors import InvalidParametersError, LineCodeViolationError
from .models import BitBlock, LineCodedFrame, PolarCodeConfig, RllScheme

logger = getLogger(__name__)

DEFAULT_ERASURE = 0.5

# Codewords for nibbles 0000 to 1111, each of Hamming weight 3
FOUR_B_SIX_B_TABLE = (
    0b001110,
    0b001101,
    0b010011,
    0b010110,
    0b010101,
    0b100011,
    0b100110,
    0b100101,
    0b011001,
    0b011010,
    0b011100,
    0b110001,
    0b110010,
    0b101001,
    0b101010,
    0b101100,
)

_ENCODE_LOOKUP = np.array(FOUR_B_SIX_B_TABLE, dtype=np.int64)
_DECODE_LOOKUP = np.full(64, -1, dtype=np.int64)
_DECODE_LOOKUP[_ENCODE_LOOKUP] = np.arange(16)

_NIBBLE_WEIGHTS = 1 << np.arange(4)
_SIXBIT_WEIGHTS = 1 << np.arange(6)


def bhattacharyya_parameters(n: int, erasure_prob: float) -> np.ndarray:
    """Bhattacharyya parameters of the 2^n synthetic erasure channels

    Channel j splits into 2j (Z -> 2Z - Z^2) and 2j + 1 (Z -> Z^2), which
    matches the index order of :func:`polar_transform`.
    """
    z = np.array([erasure_prob], dtype=float)
    for _ in range(n):
        children = np.empty(2 * len(z))
        children[0::2] = 2 * z - z * z
        children[1::2] = z * z
        z = children
    return z


def design_frozen_set(n: int, K: int, erasure_prob: float = DEFAULT_ERASURE) -> FrozenSet[int]:
    """Freeze the N - K least reliable positions of a length 2^n polar code

    Ties in the Bhattacharyya parameter freeze the lower index first.
    """
    if n < 1:
        raise InvalidParametersError(f"Polar exponent must be >= 1, got {n}")
    N = 1 << n
    if not 0 <= K <= N:
        raise InvalidParametersError(f"K = {K} is not in [0, {N}]")
    if not 0.0 < erasure_prob < 1.0:
        raise InvalidParametersError(
            f"Erasure probability must be in (0, 1), got {erasure_prob}"
        )
    z = bhattacharyya_parameters(n, erasure_prob)
    # lexsort keys: last is primary, so sort by -Z then by index
    order = np.lexsort((np.arange(N), -z))
    frozen = frozenset(int(i) for i in order[: N - K])
    logger.debug(f"Designed frozen set for N={N}, K={K}, erasure={erasure_prob}")
    return frozen


def insert_frozen(message: BitBlock, config: PolarCodeConfig) -> BitBlock:
    if message.length != config.K:
        raise InvalidParametersError(
            f"Message has {message.length} bits, the code carries K = {config.K}"
        )
    u = np.zeros(config.N, dtype=np.uint8)
    u[config.information_positions] = message.bits
    return BitBlock(u)


def butterfly(u: np.ndarray) -> np.ndarray:
    """Polar transform along the last axis of a 0/1 array

    Works on a single block or a batch of blocks (one per row).
    """
    x = np.array(u, dtype=np.uint8)
    N = x.shape[-1]
    if N < 2 or N & (N - 1):
        raise InvalidParametersError(f"Length {N} is not a power of two >= 2")
    batch = x.reshape(-1, N)
    b = N
    while b > 1:
        half = b // 2
        blocks = batch.reshape(batch.shape[0], N // b, 2, half)
        blocks[:, :, 0, :] ^= blocks[:, :, 1, :]
        b = half
    return batch.reshape(x.shape)


def polar_transform(u: BitBlock) -> BitBlock:
    return BitBlock(butterfly(u.bits))


def polar_encode(message: BitBlock, config: PolarCodeConfig) -> BitBlock:
    return polar_transform(insert_frozen(message, config))


def polar_extract(codeword: BitBlock, config: PolarCodeConfig) -> BitBlock:
    """Recover the message from a noiseless codeword

    The transform is its own inverse over GF(2).
    """
    if codeword.length != config.N:
        raise InvalidParametersError(
            f"Codeword has {codeword.length} bits, the code has N = {config.N}"
        )
    u = butterfly(codeword.bits)
    return BitBlock(u[config.information_positions])


def manchester_encode(codeword: BitBlock) -> LineCodedFrame:
    if codeword.length == 0:
        raise InvalidParametersError("Cannot line code an empty block")
    out = np.empty(2 * codeword.length, dtype=np.uint8)
    out[0::2] = codeword.bits
    out[1::2] = 1 - codeword.bits
    return LineCodedFrame(RllScheme.MANCHESTER, BitBlock(out))


def manchester_decode(frame: LineCodedFrame) -> BitBlock:
    pairs = frame.bits.bits.reshape(-1, 2)
    invalid = np.flatnonzero(pairs[:, 0] == pairs[:, 1])
    if len(invalid):
        index = int(invalid[0])
        raise LineCodeViolationError(
            RllScheme.MANCHESTER.value, index, "".join(map(str, pairs[index]))
        )
    return BitBlock(pairs[:, 0])


def four_b_six_b_encode(codeword: BitBlock) -> LineCodedFrame:
    """Map every 4-bit group through the 4B6B table

    Bit x + j of a group carries weight 2^j in the table lookup and codeword
    bit j (weight 2^j) lands at frame position 6g + j.
    """
    if codeword.length == 0 or codeword.length % 4:
        raise InvalidParametersError(
            f"4B6B needs a nonzero length divisible by 4, got {codeword.length}"
        )
    nibbles = codeword.bits.reshape(-1, 4).astype(np.int64) @ _NIBBLE_WEIGHTS
    words = _ENCODE_LOOKUP[nibbles]
    out = ((words[:, None] >> np.arange(6)) & 1).astype(np.uint8)
    return LineCodedFrame(RllScheme.FOUR_B_SIX_B, BitBlock(out.reshape(-1)))


def four_b_six_b_decode(frame: LineCodedFrame) -> BitBlock:
    groups = frame.bits.bits.reshape(-1, 6)
    words = groups.astype(np.int64) @ _SIXBIT_WEIGHTS
    nibbles = _DECODE_LOOKUP[words]
    invalid = np.flatnonzero(nibbles < 0)
    if len(invalid):
        index = int(invalid[0])
        raise LineCodeViolationError(
            RllScheme.FOUR_B_SIX_B.value, index, "".join(map(str, groups[index]))
        )
    out = ((nibbles[:, None] >> np.arange(4)) & 1).astype(np.uint8)
    return BitBlock(out.reshape(-1))


def rll_encode(codeword: BitBlock, scheme: RllScheme) -> LineCodedFrame:
    if scheme is RllScheme.MANCHESTER:
        return manchester_encode(codeword)
    return four_b_six_b_encode(codeword)


def rll_decode(frame: LineCodedFrame) -> BitBlock:
    if frame.scheme is RllScheme.MANCHESTER:
        return manchester_decode(frame)
    return four_b_six_b_decode(frame)


def transmit_pipeline(
    message: BitBlock, config: PolarCodeConfig, scheme: RllScheme
) -> LineCodedFrame:
    """Polar encode then line code one message, the work done per anchor update"""
    return rll_encode(polar_encode(message, config), scheme)


def receive_pipeline(frame: LineCodedFrame, config: PolarCodeConfig) -> BitBlock:
    return polar_extract(rll_decode(frame), config)


def code_rate(config: PolarCodeConfig, scheme: RllScheme) -> Fraction:
    """Message bits per transmitted line symbol"""
    return Fraction(config.K, scheme.frame_length(config.N))
